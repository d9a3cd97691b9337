"""HTTP facade over the warehouse, query engine, and statistics.

Routes are registered inside create_app so every handler closes over
one AppState; tests build isolated apps by passing a fresh data_dir.
All failures use one envelope: {"error": {"code": …, "message": …}}
with 404 for missing things, 409 for name conflicts, and 422 for
anything the core modules reject.
"""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from liststand.analytics import (
    RankedTable,
    answering_profile,
    coparticipation_graph,
    posts_per_domain,
    posts_per_entity,
    posters_per_domain,
    recommendation_table,
)
from liststand.errors import ListstandError
from liststand.export import to_csv, to_dot, to_graphml, to_pajek
from liststand.identity import IdentityError
from liststand.ingest.model import MailboxSource, parse_timestamp
from liststand.query import QueryError, evaluate, infer_result_schema, parse_query_spec
from liststand.service import models
from liststand.service.state import AppState, default_data_dir
from liststand.warehouse import serialize_tree

RECOMMENDATION_COLUMNS = ["individuals", "rec", "notes", "drafts"]

GRAPH_WRITERS = {
    "graphml": (to_graphml, "application/xml"),
    "dot": (to_dot, "text/vnd.graphviz"),
    "pajek": (to_pajek, "text/plain"),
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def not_found(message: str) -> ApiError:
    return ApiError(404, "not_found", message)


def conflict(message: str) -> ApiError:
    return ApiError(409, "conflict", message)


def _error_body(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def _code_for(exc: Exception) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", type(exc).__name__).lower()


def _view_or_none(state: AppState, name: str):
    try:
        return state.views.get(name)
    except QueryError:
        return None


def _view_out(state: AppState, name: str) -> models.ViewOut:
    view = state.views.get(name)
    return models.ViewOut(
        name=view.name,
        source=view.spec.source,
        materialized=view.materialized,
        stale=state.views.stale(name),
        built_at_version=view.built_at_version,
    )


def _ranked_rows(table: RankedTable) -> list[models.RowOut]:
    return [models.RowOut(key=key, values=list(values)) for key, values in table.rows]


def create_app(data_dir: str | Path | None = None, state: AppState | None = None) -> FastAPI:
    state = state or AppState(Path(data_dir) if data_dir else default_data_dir())
    app = FastAPI(title="liststand", version="0.1.0")
    app.state.liststand = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content=_error_body(exc.code, exc.message))

    @app.exception_handler(ListstandError)
    async def on_core_error(request: Request, exc: ListstandError) -> JSONResponse:
        return JSONResponse(status_code=422, content=_error_body(_code_for(exc), str(exc)))

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        # body/parameter shape problems are the client's fault, not the engine's
        return JSONResponse(status_code=400, content=_error_body("request_invalid", str(exc)))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    # -- ingest and collections ----------------------------------------

    @app.post("/ingest", response_model=models.JobOut)
    def ingest(body: models.IngestRequest) -> models.JobOut:
        sources = [MailboxSource(s.source_id, s.kind, s.uri) for s in body.sources]
        tags = frozenset(body.list_tags) if body.list_tags else None
        work = lambda: state.ingest(sources, body.collection, tags)
        if body.background:
            job = state.jobs.submit(work)
            return models.JobOut(job_id=job.job_id, status=job.status)
        return models.JobOut(job_id="", status="done", detail=work())

    @app.get("/jobs/{job_id}", response_model=models.JobOut)
    def job_status(job_id: str) -> models.JobOut:
        job = state.jobs.get(job_id)
        if job is None:
            raise not_found(f"unknown job {job_id!r}")
        return models.JobOut(job_id=job.job_id, status=job.status, detail=job.detail, error=job.error)

    @app.get("/collections", response_model=list[models.CollectionOut])
    def collections() -> list[models.CollectionOut]:
        out = []
        for name in state.warehouse.collections():
            snap = state.warehouse.snapshot(name)
            out.append(models.CollectionOut(name=name, version=snap.version, documents=len(snap.documents)))
        return out

    @app.get("/schema/{source}", response_model=models.SchemaOut, response_model_by_alias=True)
    def schema_of(source: str) -> models.SchemaOut:
        resolved = state.views.resolve(source)
        if resolved is None:
            raise not_found(f"unknown collection or view {source!r}")
        schema = resolved.schema.to_json_dict() if resolved.schema else None
        return models.SchemaOut(source=source, version=resolved.version, schema_def=schema)

    # -- queries and views ---------------------------------------------

    @app.post("/query", response_model=models.QueryResponse)
    def run_query(body: models.QueryRequest) -> models.QueryResponse:
        spec = parse_query_spec(body.spec)
        resolved = state.views.resolve(spec.source)
        if resolved is None:
            raise not_found(f"unknown collection or view {spec.source!r}")
        documents = evaluate(spec, state.views)
        if body.limit is not None:
            documents = documents[: body.limit]
        try:
            result_schema, schema_error = infer_result_schema(spec, resolved.schema).to_json_dict(), None
        except QueryError as exc:
            result_schema, schema_error = None, str(exc)
        return models.QueryResponse(
            documents=[serialize_tree(doc) for doc in documents],
            result_schema=result_schema,
            schema_error=schema_error,
        )

    @app.post("/views", response_model=models.ViewOut, status_code=201)
    def create_view(body: models.ViewCreate) -> models.ViewOut:
        spec = parse_query_spec(body.spec)
        if _view_or_none(state, body.name) is not None or state.warehouse.exists(body.name):
            raise conflict(f"name {body.name!r} already in use")
        if state.views.resolve(spec.source) is None:
            raise not_found(f"unknown collection or view {spec.source!r}")
        state.views.register(body.name, spec, materialized=body.materialized)
        return _view_out(state, body.name)

    @app.get("/views", response_model=list[models.ViewOut])
    def list_views() -> list[models.ViewOut]:
        return [_view_out(state, view.name) for view in state.views.views()]

    @app.get("/views/{name}", response_model=models.ViewDetailOut)
    def view_detail(name: str) -> models.ViewDetailOut:
        view = _view_or_none(state, name)
        if view is None:
            raise not_found(f"unknown view {name!r}")
        base = _view_out(state, name)
        return models.ViewDetailOut(
            **base.model_dump(),
            spec=view.spec.to_json_dict(),
            result_schema=view.result_schema.to_json_dict() if view.result_schema else None,
        )

    @app.post("/views/{name}/refresh", response_model=models.ViewOut)
    def refresh_view(name: str) -> models.ViewOut:
        if _view_or_none(state, name) is None:
            raise not_found(f"unknown view {name!r}")
        state.views.refresh(name)
        return _view_out(state, name)

    # -- statistics ----------------------------------------------------

    def bundle_for(collection: str):
        if not state.warehouse.exists(collection):
            raise not_found(f"unknown collection {collection!r}")
        return state.analysis(collection)

    def ranked_for(kind: str, collection: str) -> RankedTable:
        bundle = bundle_for(collection)
        messages = list(bundle.messages)
        if kind == "posts_per_entity":
            return posts_per_entity(messages, bundle.catalog)
        if kind == "posts_per_domain":
            return posts_per_domain(messages, state.institution_map())
        if kind == "posters_per_domain":
            return posters_per_domain(messages, bundle.catalog)
        raise ApiError(422, "unknown_kind", f"unknown stats kind {kind!r}")

    @app.get("/stats")
    def stats(kind: str, collection: str = "messages", top: int | None = None,
              anonymize: bool = False, format: str = "json"):
        if kind == "recommendation":
            rows = [
                models.RowOut(
                    key=row.institution,
                    values=[row.individuals, row.rec, row.notes, row.drafts],
                    tag=row.type,
                )
                for row in recommendation_table(state.facts, state.institution_map())
            ]
            value_names = RECOMMENDATION_COLUMNS
        else:
            table = ranked_for(kind, collection)
            rows = _ranked_rows(table)
            value_names = list(table.value_names)
        if top is not None:
            rows = rows[:top]
        if anonymize:
            rows = [row.model_copy(update={"key": f"{i}.", "tag": None}) for i, row in enumerate(rows, 1)]
        if format == "csv":
            if kind == "recommendation":
                out = io.StringIO()
                writer = csv.writer(out)
                writer.writerow(["institution", "type"] + value_names)
                for row in rows:
                    writer.writerow([row.key, row.tag or "n.a."] + row.values)
                return PlainTextResponse(out.getvalue(), media_type="text/csv")
            text = to_csv(RankedTable(tuple((r.key, tuple(r.values)) for r in rows), tuple(value_names)))
            return PlainTextResponse(text, media_type="text/csv")
        if format != "json":
            raise ApiError(422, "unknown_format", f"unknown stats format {format!r}")
        return models.StatsOut(kind=kind, value_names=value_names, rows=rows)

    @app.get("/graph")
    def graph(kind: str = "coparticipation", collection: str = "messages",
              min_weight: int = 1, weighting: str = "threads", format: str = "json"):
        if kind != "coparticipation":
            raise ApiError(422, "unknown_kind", f"unknown graph kind {kind!r}")
        bundle = bundle_for(collection)
        result = coparticipation_graph(
            bundle.forest, bundle.catalog,
            min_weight=min_weight,
            institution_map=state.institution_map(),
            weighting=weighting,
        )
        if format == "json":
            return models.GraphOut(
                nodes=[models.NodeOut(entity_id=e, label=l, institution=i) for e, l, i in result.nodes],
                edges=[models.EdgeOut(a=a, b=b, weight=w) for a, b, w in result.edges],
            )
        if format not in GRAPH_WRITERS:
            raise ApiError(422, "unknown_format", f"unknown graph format {format!r}")
        writer, media_type = GRAPH_WRITERS[format]
        return PlainTextResponse(writer(result), media_type=media_type)

    @app.get("/entities", response_model=list[models.EntityOut])
    def entities(collection: str = "messages") -> list[models.EntityOut]:
        bundle = bundle_for(collection)
        posts = Counter(bundle.catalog.entity_of_message(m) for m in bundle.messages)
        out = [
            models.EntityOut(
                entity_id=eid,
                label=bundle.catalog.label(eid),
                posts=posts[eid],
                addresses=sorted(str(a) for a in bundle.catalog.entity(eid).addresses),
            )
            for eid in posts
        ]
        out.sort(key=lambda e: (-e.posts, e.label, e.entity_id))
        return out

    @app.get("/profile/{entity}", response_model=models.ProfileOut)
    def profile(entity: int, collection: str = "messages") -> models.ProfileOut:
        bundle = bundle_for(collection)
        try:
            bundle.catalog.entity(entity)
        except IdentityError as exc:
            raise not_found(str(exc)) from exc
        result = answering_profile(entity, bundle.forest, bundle.catalog)
        return models.ProfileOut(
            subject=result.subject,
            label=bundle.catalog.label(result.subject),
            rows=[
                models.ProfileRowOut(
                    other=other,
                    label=bundle.catalog.label(other),
                    replies_to_other=to_other,
                    replies_from_other=from_other,
                )
                for other, to_other, from_other in result.rows
            ],
        )

    # -- facts and institutions ----------------------------------------

    @app.post("/facts", response_model=models.FactIdOut, status_code=201)
    def add_fact(body: models.FactBody) -> models.FactIdOut:
        return models.FactIdOut(fact_id=state.assert_fact(body.model_dump()))

    @app.post("/facts/bulk", response_model=models.FactIdsOut, status_code=201)
    async def add_facts_bulk(request: Request) -> models.FactIdsOut:
        text = (await request.body()).decode("utf-8")
        return models.FactIdsOut(fact_ids=state.assert_bulk(text.splitlines()))

    @app.get("/facts")
    def list_facts(agent: str | None = None, as_of: str | None = None,
                   via: str | None = None, limit: int | None = None) -> list[dict]:
        if agent is not None and as_of is not None:
            try:
                cutoff = parse_timestamp(as_of)
            except ValueError as exc:
                raise ApiError(422, "request_invalid", f"as_of: {exc}") from exc
            found = state.facts.known_by(agent, cutoff)
        elif agent is not None or as_of is not None:
            raise ApiError(422, "request_invalid", "agent and as_of must be supplied together")
        elif via is not None:
            found = state.facts.via_source(via)
        else:
            found = state.facts.all()
        if limit is not None:
            found = found[:limit]
        return [sf.to_json_dict() for sf in found]

    @app.put("/institutions", response_model=models.InstitutionsOut)
    async def put_institutions(request: Request) -> models.InstitutionsOut:
        imap = state.set_institutions((await request.body()).decode("utf-8"))
        return models.InstitutionsOut(rules=imap.rules)

    @app.get("/institutions", response_model=models.InstitutionsOut)
    def get_institutions() -> models.InstitutionsOut:
        imap = state.institution_map()
        return models.InstitutionsOut(rules=imap.rules if imap else [])

    return app
