import pytest

from dstgen.annotation import (
    CarryoverPair,
    annotate_dialogue,
    answer_bindings,
    collect_unanswered,
    generate_qa_pairs,
    qa_bindings,
    resolve_requests,
    slot_name_bindings,
    translate_slot_names,
    translate_values,
    value_bindings,
)
from dstgen.errors import AnnotationFailed
from dstgen.fixtures import (
    Request,
    Resolution,
    ScriptedScenario,
    Share,
    ScriptedTurn,
    install_dialogue_fixtures,
    scripted_dialogue,
)
from dstgen.gateway import LlmGateway, ScriptedMockBackend, write_fixture
from dstgen.model import Dialogue, QAPair, Turn
from dstgen.prompts import FORMAT_REMINDERS, load_templates


def make_gateway(tmp_path):
    return LlmGateway(ScriptedMockBackend(tmp_path), load_templates(), default_model="mock")


def make_dialogue(texts):
    return Dialogue(
        id="d0",
        scenario_id="s0",
        turns=tuple(
            Turn(index=i, speaker="A" if i % 2 == 0 else "B", text=t)
            for i, t in enumerate(texts)
        ),
    )


# --- QA pair generation -------------------------------------------------------------

def test_qa_pairs_from_informative_turn(tmp_path):
    dialogue = make_dialogue(["What is the size of the land?",
                              "It's approximately 20 acres."])
    write_fixture(
        tmp_path, "qa_pairs", qa_bindings(dialogue, 1, ()),
        "A: What is the size of the land?\nB: Approximately 20 acres.",
    )
    pairs = generate_qa_pairs(make_gateway(tmp_path), dialogue, 1)
    assert pairs == [QAPair("What is the size of the land?", "Approximately 20 acres.")]


def test_qa_pairs_request_becomes_unknown(tmp_path):
    dialogue = make_dialogue(["Can you tell me about the terrain?", "Sure."])
    write_fixture(
        tmp_path, "qa_pairs", qa_bindings(dialogue, 0, ()),
        "A: What is the terrain type?\nB: Unknown.",
    )
    pairs = generate_qa_pairs(make_gateway(tmp_path), dialogue, 0)
    assert pairs[0].is_unknown


def test_qa_pairs_deduplicate_carryover_questions(tmp_path):
    dialogue = make_dialogue(["turn zero", "turn one"])
    carry = (CarryoverPair(QAPair("What is the price?", "$40"), "price"),)
    write_fixture(
        tmp_path, "qa_pairs", qa_bindings(dialogue, 1, carry),
        "A: what is the price?\nB: $40\nA: What is the color?\nB: Blue.",
    )
    pairs = generate_qa_pairs(make_gateway(tmp_path), dialogue, 1, carry)
    assert pairs == [QAPair("What is the color?", "Blue.")]


def test_qa_pairs_cap(tmp_path):
    dialogue = make_dialogue(["a", "b"])
    lines = "\n".join(f"B: Question {i}?\nA: Answer {i}." for i in range(20))
    write_fixture(tmp_path, "qa_pairs", qa_bindings(dialogue, 0, ()), lines)
    pairs = generate_qa_pairs(make_gateway(tmp_path), dialogue, 0, max_pairs=16)
    assert len(pairs) == 16


def test_qa_pairs_blank_completion_is_empty_update(tmp_path):
    dialogue = make_dialogue(["Of course, please go ahead.", "Thanks."])
    write_fixture(tmp_path, "qa_pairs", qa_bindings(dialogue, 0, ()), "")
    assert generate_qa_pairs(make_gateway(tmp_path), dialogue, 0) == []


def test_qa_pairs_failure_is_tagged(tmp_path):
    dialogue = make_dialogue(["a", "b"])
    bindings = qa_bindings(dialogue, 0, ())
    write_fixture(tmp_path, "qa_pairs", bindings, "garbage")
    retry = dict(bindings, format_reminder=FORMAT_REMINDERS["qa_pairs"])
    write_fixture(tmp_path, "qa_pairs", retry, "still garbage")
    with pytest.raises(AnnotationFailed) as info:
        generate_qa_pairs(make_gateway(tmp_path), dialogue, 0)
    assert info.value.dialogue_id == "d0"
    assert info.value.turn_index == 0


def test_qa_bindings_window():
    dialogue = make_dialogue(["first", "second", "third"])
    at_zero = qa_bindings(dialogue, 0, ())
    assert at_zero["dialogue_context"] == ""
    assert at_zero["last_turn"] == "first"
    assert at_zero["speaker"] == "A" and at_zero["listener"] == "B"
    at_two = qa_bindings(dialogue, 2, ())
    assert at_two["dialogue_context"] == "B: second"
    assert at_two["last_turn"] == "third"


def test_qa_bindings_render_carryover_as_answered():
    dialogue = make_dialogue(["q", "a"])
    carry = (CarryoverPair(QAPair("What is the price?", "$40"), "price"),)
    bindings = qa_bindings(dialogue, 1, carry)
    assert bindings["answered_qa_pairs"] == "A: What is the price?\nB: $40"


# --- unanswered collection ------------------------------------------------------------

def test_collect_unanswered():
    pairs = [QAPair("q1", "a1"), QAPair("q2", None), QAPair("q3", None)]
    assert collect_unanswered(pairs) == ["q2", "q3"]
    assert collect_unanswered([QAPair("q", "a")]) == []
    assert collect_unanswered([]) == []


# --- request resolution ----------------------------------------------------------------

def test_resolve_requests_filters_unknown(tmp_path):
    dialogue = make_dialogue(["What's the price and the terrain?",
                              "The price is $40."])
    questions = ["What is the price?", "What is the terrain type?"]
    write_fixture(
        tmp_path, "qa_answers", answer_bindings(dialogue, 0, questions),
        "A: What is the price?\nB: $40.\n"
        "A: What is the terrain type?\nB: Unknown.",
    )
    resolved = resolve_requests(make_gateway(tmp_path), dialogue, 0, questions)
    assert resolved == [QAPair("What is the price?", "$40.")]


def test_resolve_requests_empty_short_circuits(tmp_path):
    dialogue = make_dialogue(["a", "b"])
    assert resolve_requests(make_gateway(tmp_path), dialogue, 0, []) == []


def test_resolve_requests_drops_unrequested_questions(tmp_path):
    dialogue = make_dialogue(["q?", "a."])
    questions = ["What is the price?"]
    write_fixture(
        tmp_path, "qa_answers", answer_bindings(dialogue, 0, questions),
        "A: What is the price?\nB: $40.\nA: Invented question?\nB: Invented.",
    )
    resolved = resolve_requests(make_gateway(tmp_path), dialogue, 0, questions)
    assert resolved == [QAPair("What is the price?", "$40.")]


# --- slot name translation ----------------------------------------------------------------

def test_translate_slot_names_figure_mapping(tmp_path):
    questions = ["What is the size of the land?"]
    write_fixture(tmp_path, "slot_names", slot_name_bindings(questions),
                  "What is the size of the land? -> Land  Size")
    names = translate_slot_names(make_gateway(tmp_path), questions)
    assert names == ["land size"]


def test_translate_slot_names_count_mismatch_fails_after_retry(tmp_path):
    questions = ["q1?", "q2?", "q3?"]
    bindings = slot_name_bindings(questions)
    write_fixture(tmp_path, "slot_names", bindings, "q1? -> a\nq2? -> b")
    retry = dict(bindings, format_reminder=FORMAT_REMINDERS["slot_names"])
    write_fixture(tmp_path, "slot_names", retry, "q1? -> a\nq2? -> b")
    with pytest.raises(AnnotationFailed):
        translate_slot_names(make_gateway(tmp_path), questions)


def test_translate_slot_names_count_mismatch_recovers_on_retry(tmp_path):
    questions = ["q1?", "q2?"]
    bindings = slot_name_bindings(questions)
    write_fixture(tmp_path, "slot_names", bindings, "q1? -> a")
    retry = dict(bindings, format_reminder=FORMAT_REMINDERS["slot_names"])
    write_fixture(tmp_path, "slot_names", retry, "q1? -> a\nq2? -> b")
    assert translate_slot_names(make_gateway(tmp_path), questions) == ["a", "b"]


def test_translate_slot_names_duplicates_permitted(tmp_path):
    questions = ["When?", "When?"]
    write_fixture(tmp_path, "slot_names", slot_name_bindings(questions),
                  "When? -> date\nWhen? -> date")
    assert translate_slot_names(make_gateway(tmp_path), questions) == ["date", "date"]


# --- value translation ------------------------------------------------------------------

def test_translate_values_figure_flow(tmp_path):
    pairs = [
        QAPair("What is the size of the land?", "approximately 20 acres"),
        QAPair("What is the terrain type?", None),
    ]
    names = ["land size", "terrain type"]
    write_fixture(
        tmp_path, "slot_values",
        value_bindings([("What is the size of the land?", "land size",
                         "approximately 20 acres")]),
        "Question: What is the size of the land?\nVariable: land size\n"
        "Answer: approximately 20 acres\nValue: 20 acres",
    )
    annotation = translate_values(make_gateway(tmp_path), pairs, names, turn_index=3)
    update = annotation.update
    assert update.turn_index == 3
    assert [(p.slot, p.value) for p in update.pairs] == [
        ("land size", "20 acres"), ("terrain type", "?")
    ]
    assert annotation.questions == (
        "What is the size of the land?", "What is the terrain type?"
    )


def test_translate_values_all_unknown_skips_backend(tmp_path):
    pairs = [QAPair("q1?", None), QAPair("q2?", None)]
    annotation = translate_values(make_gateway(tmp_path), pairs, ["s1", "s2"], 0)
    assert all(p.is_requested for p in annotation.update.pairs)


def test_translate_values_duplicate_slots_suffixed(tmp_path):
    pairs = [QAPair("When does it open?", "at 9"), QAPair("When does it close?", "at 5")]
    names = ["date", "date"]
    write_fixture(
        tmp_path, "slot_values",
        value_bindings([("When does it open?", "date", "at 9"),
                        ("When does it close?", "date", "at 5")]),
        "Question: When does it open?\nVariable: date\nAnswer: at 9\nValue: 9am\n"
        "Question: When does it close?\nVariable: date\nAnswer: at 5\nValue: 5pm",
    )
    update = translate_values(make_gateway(tmp_path), pairs, names, 0).update
    assert [(p.slot, p.value) for p in update.pairs] == [
        ("date", "9am"), ("date#2", "5pm")
    ]


def test_translate_values_falls_back_to_raw_answer(tmp_path):
    pairs = [QAPair("q one?", "raw answer one"), QAPair("q two?", "raw answer two")]
    names = ["s one", "s two"]
    write_fixture(
        tmp_path, "slot_values",
        value_bindings([("q one?", "s one", "raw answer one"),
                        ("q two?", "s two", "raw answer two")]),
        "Question: q one?\nVariable: s one\nAnswer: raw answer one\nValue: one",
    )
    update = translate_values(make_gateway(tmp_path), pairs, names, 0).update
    assert [(p.slot, p.value) for p in update.pairs] == [
        ("s one", "one"), ("s two", "raw answer two")
    ]


# --- full-dialogue annotation (scripted protocol) -------------------------------------------

REQUEST_FILL = ScriptedScenario(
    description="Customer talks to vendor in order to buy a painting",
    info_types=("price", "size"),
    dialogues=(
        (
            ScriptedTurn(
                speaker="A", text="How much does the painting cost?",
                requests=(Request("What is the price of the painting?", "price"),),
            ),
            ScriptedTurn(
                speaker="B", text="It costs $40.",
                resolutions=(
                    Resolution("What is the price of the painting?", "It costs $40.", "$40"),
                ),
            ),
        ),
    ),
)


def test_two_turn_request_fill_contract(tmp_path):
    install_dialogue_fixtures(tmp_path, REQUEST_FILL, REQUEST_FILL.dialogues[0])
    dialogue = scripted_dialogue(REQUEST_FILL, 0, REQUEST_FILL.dialogues[0])
    annotations = annotate_dialogue(make_gateway(tmp_path), dialogue)
    assert len(annotations) == 2
    first, second = (a.update for a in annotations)
    assert [(p.slot, p.value) for p in first.pairs] == [("price", "?")]
    assert [(p.slot, p.value) for p in second.pairs] == [("price", "$40")]


def test_uninformative_dialogue_all_updates_empty(tmp_path):
    scenario = ScriptedScenario(
        description="Neighbor talks to neighbor in order to say hello",
        info_types=("greeting",),
        dialogues=(
            (
                ScriptedTurn(speaker="A", text="Hi."),
                ScriptedTurn(speaker="B", text="Hello."),
                ScriptedTurn(speaker="A", text="Nice day."),
            ),
        ),
    )
    install_dialogue_fixtures(tmp_path, scenario, scenario.dialogues[0])
    dialogue = scripted_dialogue(scenario, 0, scenario.dialogues[0])
    annotations = annotate_dialogue(make_gateway(tmp_path), dialogue)
    assert [len(a.update.pairs) for a in annotations] == [0, 0, 0]


LAND_SURVEY = ScriptedScenario(
    description="Surveyor talks to landowner in order to assess the value of a property",
    info_types=("location", "land size", "terrain type"),
    dialogues=(
        (
            ScriptedTurn(
                speaker="A",
                text="Good afternoon, Mr. Smith. I'm here today to survey your land and assess its value.",
                shares=(
                    Share("What is the purpose of the visit?",
                          "To survey the land and assess its value.",
                          "visit purpose", "land survey"),
                ),
            ),
            ScriptedTurn(speaker="B", text="Of course, please go ahead."),
            ScriptedTurn(
                speaker="A",
                text="Firstly, can you tell me the location and size of the land?",
                requests=(
                    Request("What is the location of the land?", "location"),
                    Request("What is the size of the land?", "land size"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Sure. The land is located on the outskirts of town, about 10 miles away from the city center. It's approximately 20 acres.",
                shares=(
                    Share("How far is the land from the city center?",
                          "About 10 miles.", "distance from city", "10 miles"),
                ),
                resolutions=(
                    Resolution("What is the location of the land?",
                               "On the outskirts of town.", "outskirts of town"),
                    Resolution("What is the size of the land?",
                               "It's approximately 20 acres.", "20 acres"),
                ),
            ),
            ScriptedTurn(
                speaker="A",
                text="That's helpful. Can you also tell me about the type of terrain on the property?",
                requests=(Request("What is the terrain type?", "terrain type"),),
            ),
            ScriptedTurn(
                speaker="B",
                text="It's mostly flat grassland with a small creek along the northern edge.",
                shares=(
                    Share("What water features are on the property?",
                          "A small creek along the northern edge.",
                          "water features", "small creek"),
                ),
                resolutions=(
                    Resolution("What is the terrain type?",
                               "Mostly flat grassland.", "flat grassland"),
                ),
            ),
        ),
    ),
)


def test_land_survey_trace(tmp_path):
    install_dialogue_fixtures(tmp_path, LAND_SURVEY, LAND_SURVEY.dialogues[0])
    dialogue = scripted_dialogue(LAND_SURVEY, 0, LAND_SURVEY.dialogues[0])
    annotations = annotate_dialogue(make_gateway(tmp_path), dialogue)
    updates = [a.update for a in annotations]

    assert [(p.slot, p.value) for p in updates[0].pairs] == [("visit purpose", "land survey")]
    assert [len(u.pairs) for u in updates] == [1, 0, 2, 3, 1, 2]
    assert [(p.slot, p.value) for p in updates[2].pairs] == [
        ("location", "?"), ("land size", "?")
    ]
    # carryover pairs merge ahead of the turn's new pairs
    assert [(p.slot, p.value) for p in updates[3].pairs] == [
        ("location", "outskirts of town"),
        ("land size", "20 acres"),
        ("distance from city", "10 miles"),
    ]
    assert [(p.slot, p.value) for p in updates[4].pairs] == [("terrain type", "?")]
    assert [(p.slot, p.value) for p in updates[5].pairs] == [
        ("terrain type", "flat grassland"), ("water features", "small creek")
    ]

    # request-resolution property: every "?" answered next turn shares its name
    for t, update in enumerate(updates[:-1]):
        for pair in update.pairs:
            if pair.is_requested:
                following = {p.slot for p in updates[t + 1].pairs if p.is_filled}
                assert pair.slot in following

    # questions align with pairs for the description stage
    for annotation in annotations:
        assert len(annotation.questions) == len(annotation.update.pairs)


def test_annotation_is_deterministic(tmp_path):
    install_dialogue_fixtures(tmp_path, LAND_SURVEY, LAND_SURVEY.dialogues[0])
    dialogue = scripted_dialogue(LAND_SURVEY, 0, LAND_SURVEY.dialogues[0])
    first = annotate_dialogue(make_gateway(tmp_path), dialogue)
    second = annotate_dialogue(make_gateway(tmp_path), dialogue)
    assert first == second
