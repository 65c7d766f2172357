import pytest
from hypothesis import settings
from hypothesis import strategies as st

from nosqlfuzz.sut.testcase import EndpointCall
from nosqlfuzz.sut.testcase import TestCase as Case
from nosqlfuzz.values import Int64, ObjectId

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

# the stored entity of the motivating example
TC = Case((), (EndpointCall("POST"),))
STORED_ENTITY = {"_id": ObjectId("5f4a1b2c3d4e5f6a7b8c9d0e"), "x": 42, "y": "b", "z": 1.0}


T = "t"


def fake(h, k=1, distances=(), use_nosql=True, tc=None):
    """Individual whose single action 0 reached target ``T`` with score ``h``."""
    from nosqlfuzz.filters import parse_filter
    from nosqlfuzz.search.individual import Individual
    from nosqlfuzz.store import ExecutedFindRecord, NoSqlDistanceReport
    from nosqlfuzz.sut.executor import ExecutionResult

    rec = ExecutedFindRecord("db", "c", parse_filter('{"a": 1}'), True, 0)
    report = NoSqlDistanceReport([(rec, d) for d in distances], {0: k})
    result = ExecutionResult(best={T: (h, 0)}, report=report, commands={0: k})
    return Individual(tc if tc is not None else TC, result, use_nosql=use_nosql)


@pytest.fixture
def stored_entity():
    return dict(STORED_ENTITY)


scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(-(2**31), 2**31 - 1),
    st.integers(-(2**63), 2**63 - 1).map(Int64),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=6),
    st.text("0123456789abcdef", min_size=24, max_size=24).map(ObjectId),
)

field_names = st.text("abcxyz_", min_size=1, max_size=4)

values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=3),
        st.dictionaries(field_names, inner, max_size=3),
    ),
    max_leaves=8,
)

documents = st.dictionaries(field_names, values, max_size=4)

# a small domain where equalities and near misses are frequent
small_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(-3, 3),
    st.integers(-3, 3).map(Int64),
    st.sampled_from([-1.5, 0.0, 1.0, 2.5]),
    st.sampled_from(["", "a", "b", "ab"]),
)
small_values = st.recursive(
    small_scalars,
    lambda inner: st.one_of(st.lists(inner, max_size=3),
                            st.dictionaries(st.sampled_from("ab"), inner, max_size=2)),
    max_leaves=4,
)
small_documents = st.dictionaries(st.sampled_from(["a", "b", "c"]), small_values, max_size=3)


def _conditions():
    from nosqlfuzz import filters as fl
    from nosqlfuzz.values import TYPE_NAMES

    vs = st.lists(small_values, max_size=3).map(tuple)
    base = st.one_of(
        small_values.map(fl.Eq), small_values.map(fl.Ne),
        small_values.map(fl.Gt), small_values.map(fl.Gte),
        small_values.map(fl.Lt), small_values.map(fl.Lte),
        vs.map(fl.In), vs.map(fl.Nin), vs.map(fl.All),
        st.builds(fl.Mod, st.sampled_from([-3, -2, 2, 3]), st.integers(-2, 2)),
        st.booleans().map(fl.Exists),
        st.integers(0, 3).map(fl.Size),
        st.sampled_from(TYPE_NAMES).map(fl.TypeIs),
    )
    return st.one_of(base, base.map(fl.Not))


def _filters():
    from nosqlfuzz import filters as fl

    paths = st.one_of(st.sampled_from([("a",), ("b",), ("c",)]),
                      st.tuples(st.sampled_from("ab"), st.sampled_from("ab")))
    leaf = st.builds(fl.FieldClause, paths, conditions)
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.lists(inner, min_size=1, max_size=3).map(lambda cs: fl.And(tuple(cs))),
            st.lists(inner, min_size=1, max_size=3).map(lambda cs: fl.Or(tuple(cs))),
            st.lists(inner, min_size=1, max_size=3).map(lambda cs: fl.Nor(tuple(cs))),
        ),
        max_leaves=5,
    )


conditions = _conditions()
filters = _filters()


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
