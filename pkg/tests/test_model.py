import pytest
from hypothesis import given, strategies as st

from dstgen.model import (
    EMPTY_STATE,
    Demonstration,
    Dialogue,
    DialogueState,
    QAPair,
    Scenario,
    SlotSpec,
    SlotValue,
    StateUpdate,
    TrainingExample,
    Turn,
    canonical_slot,
    compile_state,
    render_context,
)


def make_dialogue(texts, dialogue_id="d0", scenario_id="s0"):
    turns = tuple(
        Turn(index=i, speaker="A" if i % 2 == 0 else "B", text=text)
        for i, text in enumerate(texts)
    )
    return Dialogue(id=dialogue_id, scenario_id=scenario_id, turns=turns)


def update(turn_index, *pairs):
    return StateUpdate(turn_index=turn_index, pairs=tuple(SlotValue(s, v) for s, v in pairs))


# --- compile_state -------------------------------------------------------------

def test_compile_from_empty_state():
    result = compile_state(EMPTY_STATE, update(0, ("land size", "20 acres")))
    assert result.get("land size") == SlotValue("land size", "20 acres")
    assert result.turn_index == 0


def test_compile_fill_overwrites_request():
    requested = compile_state(EMPTY_STATE, update(0, ("price", "?")))
    assert requested.get("price").is_requested
    filled = compile_state(requested, update(1, ("price", "$40")))
    assert filled.get("price") == SlotValue("price", "$40")


def test_compile_identity_update():
    state = compile_state(EMPTY_STATE, update(0, ("a", "1"), ("b", "2")))
    unchanged = compile_state(state, update(1))
    assert dict(unchanged.slots) == dict(state.slots)


def test_compile_is_case_insensitive_on_slot_names():
    state = compile_state(EMPTY_STATE, update(0, ("Land Size", "20 acres")))
    state = compile_state(state, update(1, ("land size ", "25 acres")))
    assert len(state.slots) == 1
    assert state.get("LAND SIZE").value == "25 acres"


def test_compile_rejects_turn_gap():
    with pytest.raises(ValueError):
        compile_state(EMPTY_STATE, update(3, ("a", "1")))


# --- fold property vs a brute-force oracle ---------------------------------------

_slots = st.sampled_from(["a", "B", "land size", "Price ", "dATe"])
_values = st.sampled_from(["1", "x y", "?", "none", "$40", "20 acres"])


@st.composite
def update_sequences(draw):
    count = draw(st.integers(min_value=0, max_value=6))
    updates = []
    for t in range(count):
        raw = draw(st.lists(st.tuples(_slots, _values), max_size=4))
        pairs, seen = [], set()
        for slot, value in raw:
            if canonical_slot(slot) in seen:
                continue
            seen.add(canonical_slot(slot))
            pairs.append(SlotValue(slot, value))
        updates.append(StateUpdate(turn_index=t, pairs=tuple(pairs)))
    return updates


def brute_force_state(updates):
    """Independent oracle: scan for the last mention of every slot."""
    final = {}
    for u in updates:
        for pair in u.pairs:
            final[canonical_slot(pair.slot)] = pair.value
    return final


@given(update_sequences())
def test_fold_matches_last_writer_oracle(updates):
    state = EMPTY_STATE
    for u in updates:
        state = compile_state(state, u)
    expected = brute_force_state(updates)
    assert {k: p.value for k, p in state.slots.items()} == expected
    assert set(state.slots) == {
        canonical_slot(p.slot) for u in updates for p in u.pairs
    }


# --- invariants -------------------------------------------------------------------

def test_dialogue_requires_two_alternating_speakers():
    with pytest.raises(ValueError):
        Dialogue(id="d", scenario_id="s",
                 turns=(Turn(0, "A", "hi"), Turn(1, "A", "again")))
    with pytest.raises(ValueError):
        Dialogue(id="d", scenario_id="s", turns=(Turn(0, "A", "alone"),))
    with pytest.raises(ValueError):
        Dialogue(id="d", scenario_id="s",
                 turns=(Turn(0, "A", "x"), Turn(2, "B", "y")))


def test_scenario_embedding_must_be_unit_norm():
    Scenario(id="s", description="A talks to B in order to X", embedding=(1.0, 0.0))
    with pytest.raises(ValueError):
        Scenario(id="s", description="A talks to B in order to X", embedding=(1.0, 1.0))
    with pytest.raises(ValueError):
        Scenario(id="s", description="two\nlines")


def test_slot_value_sentinels():
    assert SlotValue.requested("x").value == "?"
    assert SlotValue.empty("x").value == "none"
    assert SlotValue("x", "20 acres").is_filled
    with pytest.raises(ValueError):
        SlotValue("", "v")
    with pytest.raises(ValueError):
        SlotValue("slot", "")


def test_state_update_rejects_duplicate_slots():
    with pytest.raises(ValueError):
        update(0, ("date", "1"), ("Date", "2"))


def test_qa_pair_validation():
    assert QAPair("q", None).is_unknown
    with pytest.raises(ValueError):
        QAPair("", "a")
    with pytest.raises(ValueError):
        QAPair("q", "  ")


def test_training_example_context_turn_count():
    dialogue = make_dialogue(["hi", "hello", "how are you"])
    spec = SlotSpec(slot="greeting", description="how they greeted")
    TrainingExample(
        scenario_id="s0", dialogue_id="d0", turn_index=2,
        context=render_context(dialogue.turns),
        spec=spec, target=SlotValue("greeting", "hi"),
    )
    with pytest.raises(ValueError):
        TrainingExample(
            scenario_id="s0", dialogue_id="d0", turn_index=1,
            context=render_context(dialogue.turns),
            spec=spec, target=SlotValue("greeting", "hi"),
        )
    with pytest.raises(ValueError):
        TrainingExample(
            scenario_id="s0", dialogue_id="d0", turn_index=2,
            context=render_context(dialogue.turns),
            spec=spec, target=SlotValue("other slot", "hi"),
        )


def test_demonstration_requires_value():
    with pytest.raises(ValueError):
        Demonstration(turn_text="t", slot="s", value=" ")


# --- serialization round trips ------------------------------------------------------

def test_dialogue_round_trip():
    dialogue = make_dialogue(["hello there", "hi, how can I help?", "I need a survey"])
    assert Dialogue.from_record(dialogue.to_record()) == dialogue


def test_state_update_round_trip():
    u = update(3, ("land size", "20 acres"), ("price", "?"), ("terrain", "none"))
    assert StateUpdate.from_record(u.to_record("d9")) == u


def test_training_example_round_trip():
    dialogue = make_dialogue(["hello", "hi"])
    example = TrainingExample(
        scenario_id="s0", dialogue_id="d0", turn_index=1,
        context=render_context(dialogue.turns),
        spec=SlotSpec(slot="greeting", description="the greeting used",
                      examples=("hello", "hi")),
        target=SlotValue("greeting", "?"),
        demos=(Demonstration("We said hi.", "greeting", "hi"),),
    )
    restored = TrainingExample.from_record(example.to_record())
    assert restored == example
    assert restored.target.is_requested


def test_scenario_round_trip_drops_embedding():
    scenario = Scenario(id="s", description="A talks to B in order to X",
                        embedding=(0.6, 0.8))
    restored = Scenario.from_record(scenario.to_record())
    assert restored.id == scenario.id
    assert restored.description == scenario.description
    assert restored.embedding is None


def test_dialogue_state_contains():
    state = DialogueState(turn_index=0, slots={"a": SlotValue("a", "1")})
    assert "A " in state
    assert "b" not in state
