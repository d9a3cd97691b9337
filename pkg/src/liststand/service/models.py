"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from liststand.service.state import DEFAULT_COLLECTION


class SourceIn(BaseModel):
    source_id: str
    kind: Literal["mbox_file", "archive_dir", "url_list"]
    uri: str


class IngestRequest(BaseModel):
    sources: list[SourceIn] = Field(min_length=1)
    collection: str = DEFAULT_COLLECTION
    list_tags: list[str] | None = None
    background: bool = False


class SourceErrorOut(BaseModel):
    source_id: str
    error: str


class IngestReport(BaseModel):
    collection: str
    stored: int
    version: int
    documents: int
    errors: list[SourceErrorOut]


class JobOut(BaseModel):
    job_id: str
    status: str
    detail: dict | None = None
    error: str | None = None


class CollectionOut(BaseModel):
    name: str
    version: int
    documents: int


class SchemaOut(BaseModel):
    source: str
    version: int
    schema_def: dict | None = Field(default=None, serialization_alias="schema")


class QueryRequest(BaseModel):
    spec: dict
    limit: int | None = Field(default=None, ge=0)


class QueryResponse(BaseModel):
    documents: list[str]
    result_schema: dict | None = None
    schema_error: str | None = None


class ViewCreate(BaseModel):
    name: str
    spec: dict
    materialized: bool = False


class ViewOut(BaseModel):
    name: str
    source: str
    materialized: bool
    stale: bool
    built_at_version: int | None = None


class ViewDetailOut(ViewOut):
    spec: dict
    result_schema: dict | None = None


class RowOut(BaseModel):
    key: str
    values: list[int]
    tag: str | None = None


class StatsOut(BaseModel):
    kind: str
    value_names: list[str]
    rows: list[RowOut]


class NodeOut(BaseModel):
    entity_id: int
    label: str
    institution: str | None = None


class EdgeOut(BaseModel):
    a: int
    b: int
    weight: int


class GraphOut(BaseModel):
    nodes: list[NodeOut]
    edges: list[EdgeOut]


class EntityOut(BaseModel):
    entity_id: int
    label: str
    posts: int
    addresses: list[str]


class ProfileRowOut(BaseModel):
    other: int
    label: str
    replies_to_other: int
    replies_from_other: int


class ProfileOut(BaseModel):
    subject: int
    label: str
    rows: list[ProfileRowOut]


class FactBody(BaseModel):
    fact: dict
    chain: list[dict] = Field(min_length=1)


class FactIdOut(BaseModel):
    fact_id: int


class FactIdsOut(BaseModel):
    fact_ids: list[int]


class InstitutionsOut(BaseModel):
    rules: list[tuple[str, str]]
