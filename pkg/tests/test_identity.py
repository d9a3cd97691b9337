import io
import random
from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from liststand.identity import (
    Address,
    EntityCatalog,
    IdentityError,
    InstitutionMap,
    ResolveConfig,
    extract_domain,
    map_institution,
    normalize_address,
    resolve_entities,
)
from liststand.ingest.model import Message


def msg(from_address, display=None, mid=None):
    return Message(
        message_id=mid or f"{from_address}-{random.random()}@t",
        in_reply_to=None,
        references=[],
        from_display=display,
        from_address=from_address,
        date=datetime(2002, 4, 1, tzinfo=timezone.utc),
        subject_raw="s",
        subject_norm="s",
        body_text="",
        source_id="s",
        offset=0,
    )


class TestNormalizeAddress:
    def test_full_form(self):
        addr = normalize_address('"John Doe" <John.Doe+w3c@IBM.COM>')
        assert addr.local == "john.doe"
        assert addr.domain == "ibm.com"
        assert addr.display_norm == "john doe"

    def test_bare_addr(self):
        addr = normalize_address("a@b.org")
        assert (addr.local, addr.domain, addr.display_norm) == ("a", "b.org", None)

    def test_missing_at_raises(self):
        with pytest.raises(IdentityError, match="unparseable address"):
            normalize_address("nobody")

    def test_comment_removed(self):
        addr = normalize_address("pat@x.org (Pat Smith)")
        assert addr.local == "pat"

    def test_trailing_dot_removed(self):
        assert normalize_address("a@b.org.").domain == "b.org"

    def test_plus_tag_toggle(self):
        assert normalize_address("a+list@b.org").local == "a"
        assert normalize_address("a+list@b.org", strip_plus_tag=False).local == "a+list"


class TestInstitutionMap:
    def test_wildcard_matches_subdomain_only(self):
        imap = InstitutionMap(rules=[("*.ibm.com", "ibm.com")])
        assert map_institution("us.ibm.com", imap) == "ibm.com"
        assert map_institution("ibm.com", imap) == "ibm.com"  # identity fallback, no rule hit

    def test_exact_rule_needed_for_apex(self):
        imap = InstitutionMap(rules=[("*.ibm.com", "IBM"), ("ibm.com", "IBM")])
        assert map_institution("ibm.com", imap) == "IBM"

    def test_identity_fallback(self):
        assert map_institution("oracle.com", InstitutionMap()) == "oracle.com"
        assert map_institution("mhk.me.uk", InstitutionMap(rules=[("*.ibm.com", "x")])) == "mhk.me.uk"

    def test_first_match_wins(self):
        imap = InstitutionMap(rules=[("a.com", "first"), ("a.com", "second")])
        assert map_institution("a.com", imap) == "first"

    def test_csv_parse(self):
        imap = InstitutionMap.from_csv(
            io.StringIO("# comment\n*.ibm.com,IBM\n\nw3.org , W3C\n")
        )
        assert imap.rules == [("*.ibm.com", "IBM"), ("w3.org", "W3C")]


class TestExtractDomain:
    def test_full_domain_kept(self):
        assert extract_domain(Address("x", "cogsci.ed.ac.uk")) == "cogsci.ed.ac.uk"

    def test_w3(self):
        assert extract_domain(Address("y", "w3.org")) == "w3.org"


class TestResolveEntities:
    def test_r2_merges_shared_display_name(self):
        catalog = resolve_entities(
            [msg("jd@a.com", "John Doe"), msg("john@b.org", "John Doe")]
        )
        assert len(catalog) == 1
        assert catalog.entities[0].evidence[0][0] == "R2"

    def test_r2_off_keeps_separate(self):
        catalog = resolve_entities(
            [msg("jd@a.com", "John Doe"), msg("john@b.org", "John Doe")],
            ResolveConfig(r2=False),
        )
        assert len(catalog) == 2

    def test_single_token_display_never_merges(self):
        catalog = resolve_entities([msg("ed@a.com", "Edmund"), msg("ed@b.org", "Edmund")])
        # one token fails the >= 2 token guard even though length >= 7
        assert len(catalog) == 2

    def test_short_display_never_merges(self):
        catalog = resolve_entities([msg("m@a.com", "Jo Li"), msg("m@b.org", "Jo Li")])
        assert len(catalog) == 2

    def test_r1_same_pair_same_entity(self):
        catalog = resolve_entities([msg("a@b.c"), msg("A@B.C")])
        assert len(catalog) == 1

    def test_r3_same_local_same_institution(self):
        imap = InstitutionMap(rules=[("*.ibm.com", "ibm"), ("ibm.com", "ibm")])
        config = ResolveConfig(r2=False, r3=True, institution_map=imap)
        catalog = resolve_entities(
            [msg("jsmith@us.ibm.com"), msg("jsmith@fr.ibm.com")], config
        )
        assert len(catalog) == 1
        assert catalog.entities[0].evidence[0][0] == "R3"

    def test_r3_short_local_guard(self):
        imap = InstitutionMap(rules=[("*.ibm.com", "ibm")])
        config = ResolveConfig(r2=False, r3=True, institution_map=imap)
        catalog = resolve_entities([msg("bob@us.ibm.com"), msg("bob@fr.ibm.com")], config)
        assert len(catalog) == 2

    def test_partition_disjoint_and_covering(self):
        msgs = [
            msg("a@x.org", "Ann Smith"),
            msg("b@y.org", "Ann Smith"),
            msg("c@z.org", "Carl Jones"),
            msg("a@x.org"),
        ]
        catalog = resolve_entities(msgs)
        seen = set()
        for entity in catalog.entities:
            for addr in entity.addresses:
                key = (addr.local, addr.domain)
                assert key not in seen
                seen.add(key)
        assert seen == {("a", "x.org"), ("b", "y.org"), ("c", "z.org")}

    def test_order_insensitive_identical_ids(self):
        msgs = [
            msg("a@x.org", "Ann Smith"),
            msg("b@y.org", "Ann Smith"),
            msg("c@z.org"),
            msg("d@w.org", "Carl Jones"),
            msg("e@v.org", "Carl Jones"),
        ]
        base = resolve_entities(msgs).to_json_dict()
        for seed in range(5):
            shuffled = msgs[:]
            random.Random(seed).shuffle(shuffled)
            assert resolve_entities(shuffled).to_json_dict() == base

    def test_monotonicity_enabling_rules(self):
        imap = InstitutionMap(rules=[("*.a.com", "a"), ("a.com", "a")])
        msgs = [
            msg("jones@x.a.com", "Pat Jones"),
            msg("jones@y.a.com"),
            msg("pjones@b.org", "Pat Jones"),
        ]
        n_r1 = len(resolve_entities(msgs, ResolveConfig(r2=False)))
        n_r2 = len(resolve_entities(msgs, ResolveConfig(r2=True)))
        n_r23 = len(
            resolve_entities(msgs, ResolveConfig(r2=True, r3=True, institution_map=imap))
        )
        assert n_r1 >= n_r2 >= n_r23

    def test_empty_input(self):
        assert len(resolve_entities([])) == 0

    def test_evidence_connects_entity(self):
        catalog = resolve_entities(
            [
                msg("a@x.org", "Ann B Smith"),
                msg("b@y.org", "Ann B Smith"),
                msg("c@z.org", "Ann B Smith"),
            ]
        )
        (entity,) = catalog.entities
        assert len(entity.evidence) == 2  # spanning tree over 3 addresses

    def test_catalog_round_trip(self):
        catalog = resolve_entities([msg("a@x.org", "Ann Smith"), msg("b@y.org", "Ann Smith")])
        buf = io.StringIO()
        catalog.dump(buf)
        buf.seek(0)
        reloaded = EntityCatalog.load(buf)
        assert reloaded.to_json_dict()["entities"] == catalog.to_json_dict()["entities"]
        assert reloaded.entity_for_address("a@x.org") == catalog.entity_for_address("a@x.org")

    def test_unknown_address_raises(self):
        catalog = resolve_entities([msg("a@x.org")])
        with pytest.raises(IdentityError, match="not in catalog"):
            catalog.entity_for_address("zz@q.org")

    @given(st.lists(st.sampled_from(["a@x.org", "b@y.org", "c@z.org", "d@x.org"]), max_size=20))
    def test_entity_count_bounds(self, addresses):
        msgs = [msg(a) for a in addresses]
        catalog = resolve_entities(msgs)
        assert len(catalog) <= len(set(addresses)) <= max(len(msgs), len(set(addresses)))
