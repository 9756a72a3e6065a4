import pytest
import yaml

from oclk.contracts import Verdict
from oclk.diagnostics import LoadError
from oclk.dynamics import Send, check_action, check_called, check_trace, load_trace, load_trace_file

from helpers import corpus, model_of, typed_file

CARDS = model_of("cards")
CALLED = typed_file("cards", "invalidate.ocl", CARDS)[0]
ACTION = typed_file("cards", "expiry.ocl", CARDS)[0]
EXPECTED = yaml.safe_load(corpus("cards", "expected.yaml").read_text())


def trace_of(name):
    return load_trace_file(corpus("cards", f"{name}.yaml"), CARDS)


def overall(report):
    vs = {r.verdict for r in report.rows}
    for v in (Verdict.VIOLATED, Verdict.UNDEFINED):
        if v in vs:
            return v.value
    return Verdict.SATISFIED.value


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_card_traces_match_hand_oracle(name):
    trace = trace_of(name)
    got = {"called": overall(check_called(CALLED, trace, CARDS)),
           "action": overall(check_action(ACTION, trace, CARDS))}
    assert got == EXPECTED[name]


def test_missing_message_is_named():
    report = check_called(CALLED, trace_of("called_wrong_letter"), CARDS)
    (row,) = report.rows
    assert "sendPoliteInvalidLetter" in row.note


def test_zero_spans_is_vacuous():
    report = check_called(CALLED, trace_of("action_steady"), CARDS)
    assert [(r.binding, r.verdict) for r in report.rows] == [("(no spans)", Verdict.SATISFIED)]


def test_steady_condition_has_no_edges():
    report = check_action(ACTION, trace_of("action_steady"), CARDS)
    assert [r.binding for r in report.rows] == ["(no rising edges)"]


def _with_extra(trace, extra):
    entries = list(trace.entries)
    entries.insert(len(entries) - 1, extra)
    return type(trace)(entries, trace.snapshots, trace.file)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_unrelated_sends_change_nothing(name):
    trace = trace_of(name)
    noisy = _with_extra(trace, Send("cu1", "sendInvalidLetter", (), "elsewhere"))
    before = check_action(ACTION, trace, CARDS).machine_lines()
    # an extra letter can only help, never hurt
    after = check_action(ACTION, noisy, CARDS).machine_lines()
    assert len(before) == len(after)
    assert all(not (a.endswith("violated") and not b.endswith("violated")) for a, b in zip(sorted(after), sorted(before)))
    unrelated = _with_extra(trace, Send("nobody", "wave"))
    assert check_action(ACTION, unrelated, CARDS).machine_lines() == before
    assert check_called(CALLED, unrelated, CARDS).machine_lines() == check_called(CALLED, trace, CARDS).machine_lines()


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_duplicated_messages_are_monotone(name):
    trace = trace_of(name)
    doubled = []
    for e in trace.entries:
        doubled.append(e)
        if isinstance(e, Send):
            doubled.append(e)
    twice = type(trace)(doubled, trace.snapshots, trace.file)
    for check, spec in ((check_called, CALLED), (check_action, ACTION)):
        assert check(spec, twice, CARDS).machine_lines() == check(spec, trace, CARDS).machine_lines()


def test_check_trace_combines_both():
    report = check_trace([CALLED, ACTION], trace_of("action_missing"), CARDS)
    ids = {r.constraint for r in report.rows}
    assert ids == {"CustomerCard::invalidate:called", "CustomerCard:action:line1"}


BASE = "snapshots: {d: day10.yaml}\nentries:\n"


@pytest.mark.parametrize("body, fragment", [
    ("- {kind: begin, id: a, op: invalidate, receiver: c1}\n", "never ended"),
    ("- {kind: begin, id: a, op: x}\n- {kind: begin, id: b, op: y}\n- {kind: end, id: a}\n"
     "- {kind: end, id: b}\n", "innermost"),
    ("- {kind: end, id: z}\n", "innermost"),
    ("- {kind: begin, id: a, op: x}\n- {kind: end, id: a}\n- {kind: begin, id: a, op: x}\n"
     "- {kind: end, id: a}\n", "begins twice"),
    ("- {kind: state, snapshot: nope}\n", "unknown snapshot"),
    ("- {kind: jump}\n", "unknown trace entry kind"),
    ("- {kind: send, op: x}\n", "missing 'receiver'"),
    ("- {kind: send, receiver: a, op: x, colour: red}\n", "unknown key"),
])
def test_trace_load_errors(body, fragment):
    with pytest.raises(LoadError) as exc:
        load_trace(BASE + body, CARDS, base_dir=corpus("cards"))
    assert fragment in str(exc.value)


def test_nested_spans_are_accepted():
    trace = load_trace(BASE + "- {kind: state, snapshot: d}\n- {kind: begin, id: a, op: x}\n"
                       "- {kind: begin, id: b, op: y}\n- {kind: end, id: b}\n- {kind: end, id: a}\n",
                       CARDS, base_dir=corpus("cards"))
    assert [(b.id, i, j) for b, i, j in trace.spans()] == [("a", 1, 4), ("b", 2, 3)]


def test_action_needs_two_states():
    trace = load_trace(BASE + "- {kind: state, snapshot: d}\n", CARDS, base_dir=corpus("cards"))
    with pytest.raises(LoadError):
        check_action(ACTION, trace, CARDS)
