import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from questforge.dsl import (
    ActionCall,
    ForLoop,
    PlanError,
    PlanProgram,
    extract_code,
    flatten,
    parse,
    statement_count,
    unparse,
)


# ---------------------------------------------------------------------------
# extract_code


def test_extract_single_fenced_block():
    text = "Here is my plan:\n```python\ngather()\n```\nDone."
    assert extract_code(text) == "gather()"


def test_extract_last_of_two_blocks():
    text = "```\nmove(1, 1)\n```\nactually:\n```python\nmove(2, 2)\n```"
    assert extract_code(text) == "move(2, 2)"


def test_extract_without_fences_returns_whole_text():
    assert extract_code("  gather()\n") == "gather()"


# ---------------------------------------------------------------------------
# parse


def test_parse_canonical_loop():
    program = parse("for i in range(3):\n    gather()")
    assert program == PlanProgram((ForLoop(3, (ActionCall("gather"),)),))


def test_parse_sequential_calls():
    program = parse("craft('sword', 2)\nequip('sword')")
    assert program.statements == (
        ActionCall("craft", ("sword", 2)), ActionCall("equip", ("sword",)))


def test_parse_nested_loop():
    program = parse(
        "for i in range(2):\n    move(1, 2)\n    for j in range(2):\n        gather()")
    loop = program.statements[0]
    assert isinstance(loop, ForLoop) and loop.count == 2
    assert isinstance(loop.body[1], ForLoop)


@pytest.mark.parametrize("source,category,named", [
    ("while True: gather()", "forbidden_construct", "while"),
    ("x = 3", "forbidden_construct", "variable"),
    ("if True:\n    gather()", "forbidden_construct", "if"),
    ("def f():\n    pass", "forbidden_construct", "def"),
    ("import os", "forbidden_construct", "import"),
    ("for i in range(n):\n    gather()", "forbidden_construct", "non-literal"),
    ("for i in range(0):\n    gather()", "forbidden_construct", "positive"),
    ("for i in gather():\n    rest()", "forbidden_construct", "range"),
    ("teleport(1, 2)", "unknown_action", "teleport"),
    ("move(1)", "arity_mismatch", "2 argument"),
    ("craft('sword')", "arity_mismatch", "2 argument"),
    ("craft(2, 'sword')", "arity_mismatch", "str"),
    ("craft('sword', 0)", "arity_mismatch", "positive"),
    ("move(1, 2) + 1", "forbidden_construct", "action call"),
    ("gather()\n)", "syntax", ""),
])
def test_parse_rejections(source, category, named):
    with pytest.raises(PlanError) as err:
        parse(source)
    assert err.value.category == category
    assert named.lower() in err.value.message.lower()


def test_parse_error_carries_position():
    with pytest.raises(PlanError) as err:
        parse("gather()\nx = 1")
    assert err.value.line == 2
    assert err.value.to_json()["category"] == "forbidden_construct"


def test_nesting_depth_limit():
    source = ("for i in range(2):\n"
              "    for j in range(2):\n"
              "        for k in range(2):\n"
              "            gather()")
    with pytest.raises(PlanError) as err:
        parse(source)
    assert err.value.category == "nesting_depth"


def test_whitespace_insensitive_within_lines():
    assert parse("move( 1 ,  2 )") == parse("move(1, 2)")


def test_comments_are_ignored():
    program = parse("# plan\ngather()  # grab one\n")
    assert program.statements == (ActionCall("gather"),)


# ---------------------------------------------------------------------------
# flatten


def test_flatten_unrolls_loop():
    program = parse("for i in range(3):\n    gather()")
    assert [a.name for a in flatten(program)] == ["gather"] * 3


def test_flatten_empty_program():
    assert flatten(parse("")) == []


def test_flatten_nested_order():
    program = parse(
        "for i in range(2):\n    move(1, 2)\n    for j in range(2):\n        gather()")
    names = [a.name for a in flatten(program)]
    assert names == ["move", "gather", "gather", "move", "gather", "gather"]


def test_flatten_cap():
    program = parse("for i in range(200):\n    for j in range(200):\n        gather()")
    with pytest.raises(PlanError) as err:
        flatten(program)
    assert err.value.category == "plan_too_long"


# ---------------------------------------------------------------------------
# unparse round-trip


def test_unparse_canonical_formatting():
    program = parse("for i in range(3):\n  craft( 'sword',2 )")
    assert unparse(program) == "for i in range(3):\n    craft('sword', 2)\n"


@pytest.mark.parametrize("source", [
    "for i in range(3):\n    gather()",
    "craft('sword', 2)\nequip('sword')",
    "for i in range(2):\n    move(1, 2)\n    for j in range(2):\n        gather()",
])
def test_round_trip_examples(source):
    program = parse(source)
    assert parse(unparse(program)) == program


# hypothesis: generated ASTs survive parse(unparse(.))

_actions = st.sampled_from([
    ("move", st.tuples(st.integers(-5, 15), st.integers(-5, 15))),
    ("gather", st.just(())),
    ("fight", st.just(())),
    ("rest", st.just(())),
    ("craft", st.tuples(st.sampled_from(["sword", "iron_bar", "x_1"]), st.integers(1, 9))),
    ("equip", st.tuples(st.sampled_from(["sword", "ring_a"]))),
    ("unequip", st.tuples(st.sampled_from(["weapon", "ring"]))),
    ("recycle", st.tuples(st.sampled_from(["sword"]), st.integers(1, 5))),
])


@st.composite
def action_calls(draw):
    name, args_st = draw(_actions)
    return ActionCall(name, tuple(draw(args_st)))


@st.composite
def programs(draw):
    def statements(depth):
        opts = [st.lists(action_calls(), min_size=1, max_size=4)]
        if depth < 2:
            opts.append(st.lists(loops(depth + 1), min_size=1, max_size=2))
        return st.one_of(opts)

    def loops(depth):
        return st.builds(
            lambda count, body: ForLoop(count, tuple(body)),
            st.integers(1, 4), statements(depth))

    top = draw(st.lists(st.one_of(action_calls(), loops(1)), max_size=6))
    return PlanProgram(tuple(top))


@settings(max_examples=300, deadline=None)
@given(programs())
def test_round_trip_property(program):
    assert parse(unparse(program)) == program


@settings(max_examples=300, deadline=None)
@given(programs())
def test_flatten_length_matches_analytic_count(program):
    try:
        actions = flatten(program)
    except PlanError:
        return
    assert len(actions) == statement_count(program)


# ---------------------------------------------------------------------------
# totality smoke test (the big fuzz runs live in the acceptance suite)


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=200))
def test_parse_total_over_random_bytes(data):
    text = data.decode("utf-8", errors="replace")
    try:
        parse(text)
    except PlanError:
        pass
