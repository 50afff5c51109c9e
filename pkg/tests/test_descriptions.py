import pytest

from dstgen.descriptions import generate_slot_specs, spec_bindings
from dstgen.errors import DescriptionFailed
from dstgen.gateway import LlmGateway, ScriptedMockBackend, write_fixture
from dstgen.model import SlotValue, StateUpdate
from dstgen.prompts import FORMAT_REMINDERS, load_templates

FIGURE_DESCRIPTION = (
    "the area encompassed by the property, typically measured in units "
    "such as acres, hectares, or square miles."
)


def make_gateway(tmp_path):
    return LlmGateway(ScriptedMockBackend(tmp_path), load_templates(), default_model="mock")


def land_update():
    return StateUpdate(
        turn_index=3,
        pairs=(SlotValue("land size", "20 acres"), SlotValue("terrain type", "?")),
    )


QUESTIONS = ["What is the size of the land?", "What is the terrain type?"]


def entry_triples(update, questions):
    return [(p.slot, p.value, q) for p, q in zip(update.pairs, questions)]


def test_specs_parsed_and_aligned(tmp_path):
    update = land_update()
    write_fixture(
        tmp_path, "slot_specs", spec_bindings(entry_triples(update, QUESTIONS)),
        "Info Type: Land Size\n"
        "Possible Values: 50 hectares, 2 square miles\n"
        f"Description: {FIGURE_DESCRIPTION}\n"
        "\n"
        "Info Type: terrain type\n"
        "Possible Values: flat grassland, rocky hills, etc.\n"
        "Description: the kind of terrain on the property",
    )
    specs = generate_slot_specs(make_gateway(tmp_path), update, QUESTIONS)
    assert [s.slot for s in specs] == ["land size", "terrain type"]
    assert specs[0].description == FIGURE_DESCRIPTION
    assert specs[0].examples == ("50 hectares", "2 square miles")
    assert specs[1].examples == ("flat grassland", "rocky hills")


def test_missing_slot_falls_back_to_question(tmp_path):
    update = land_update()
    write_fixture(
        tmp_path, "slot_specs", spec_bindings(entry_triples(update, QUESTIONS)),
        "Info Type: land size\nPossible Values: 1 acre\nDescription: area of the land",
    )
    specs = generate_slot_specs(make_gateway(tmp_path), update, QUESTIONS)
    assert specs[1].slot == "terrain type"
    assert specs[1].description == "What is the terrain type?"
    assert specs[1].examples == ()  # requested slots contribute no observed value


def test_requested_slots_still_get_specs(tmp_path):
    update = StateUpdate(turn_index=0, pairs=(SlotValue.requested("price"),))
    questions = ["What is the price?"]
    write_fixture(
        tmp_path, "slot_specs", spec_bindings(entry_triples(update, questions)),
        "Info Type: price\nPossible Values: $10, $20\nDescription: the asking price",
    )
    specs = generate_slot_specs(make_gateway(tmp_path), update, questions)
    assert specs == [specs[0]]
    assert specs[0].slot == "price"
    assert specs[0].description == "the asking price"


def test_zero_records_after_retry_fails(tmp_path):
    update = land_update()
    bindings = spec_bindings(entry_triples(update, QUESTIONS))
    write_fixture(tmp_path, "slot_specs", bindings, "no records at all")
    retry = dict(bindings, format_reminder=FORMAT_REMINDERS["slot_specs"])
    write_fixture(tmp_path, "slot_specs", retry, "still nothing")
    with pytest.raises(DescriptionFailed):
        generate_slot_specs(make_gateway(tmp_path), update, QUESTIONS)


def test_example_value_cap(tmp_path):
    update = StateUpdate(turn_index=0, pairs=(SlotValue("color", "red"),))
    questions = ["What color is it?"]
    many = ", ".join(f"color{i}" for i in range(10))
    write_fixture(
        tmp_path, "slot_specs", spec_bindings(entry_triples(update, questions)),
        f"Info Type: color\nPossible Values: {many}\nDescription: the color",
    )
    specs = generate_slot_specs(make_gateway(tmp_path), update, questions)
    assert len(specs[0].examples) == 6


def test_empty_update_needs_no_backend(tmp_path):
    update = StateUpdate(turn_index=1, pairs=())
    assert generate_slot_specs(make_gateway(tmp_path), update, []) == []


def test_every_update_slot_gets_exactly_one_spec(tmp_path):
    update = land_update()
    write_fixture(
        tmp_path, "slot_specs", spec_bindings(entry_triples(update, QUESTIONS)),
        "Info Type: land size\nPossible Values: 1 acre\nDescription: d1\n"
        "Info Type: land size\nPossible Values: 2 acres\nDescription: duplicate\n"
        "Info Type: terrain type\nPossible Values: flat\nDescription: d2",
    )
    specs = generate_slot_specs(make_gateway(tmp_path), update, QUESTIONS)
    assert [s.slot for s in specs] == ["land size", "terrain type"]
    assert specs[0].description == "d1"  # first record wins
