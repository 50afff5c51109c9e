"""A small scripted corpus for offline smoke runs.

Three scenarios, two dialogues each, 6-8 turns per dialogue. The land-survey
dialogue follows the request-then-fill pattern (location and size asked at
one turn, answered at the next), the greeting turns produce empty updates,
and the veterinary dialogues share slot-values so demonstration mining has
same-scenario material to work with.
"""

from __future__ import annotations

from .fixtures import Request, Resolution, ScriptedScenario, ScriptedTurn, Share

LAND_SIZE_DESCRIPTION = (
    "the area encompassed by the property, typically measured in units "
    "such as acres, hectares, or square miles."
)

_LAND_SURVEY = ScriptedScenario(
    description="Surveyor talks to landowner in order to assess the value of a property",
    info_types=("location", "land size", "terrain type", "asking price"),
    slot_specs={
        "land size": (LAND_SIZE_DESCRIPTION, ("50 hectares", "2 square miles")),
        "location": ("where the property is situated", ("outskirts of town", "Route 9")),
    },
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
        (
            ScriptedTurn(
                speaker="A",
                text="Hello Ms. Alvarez, I've come to appraise the farmstead you're selling.",
                shares=(
                    Share("What is the purpose of the visit?",
                          "To appraise the farmstead.", "visit purpose", "appraisal"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Welcome. It's the white farmhouse out on Route 9.",
                shares=(
                    Share("Where is the property located?",
                          "The white farmhouse on Route 9.", "location", "Route 9"),
                ),
            ),
            ScriptedTurn(
                speaker="A",
                text="How large is the parcel, and does it include the barn?",
                requests=(
                    Request("What is the size of the parcel?", "land size"),
                    Request("Is the barn included in the sale?", "barn included"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="It's 35 acres, and yes, the barn comes with it.",
                resolutions=(
                    Resolution("What is the size of the parcel?",
                               "It's 35 acres.", "35 acres"),
                    Resolution("Is the barn included in the sale?",
                               "Yes, the barn is included.", "yes"),
                ),
            ),
            ScriptedTurn(
                speaker="A",
                text="Do you know the asking price you'd like to list at?",
                requests=(Request("What is the asking price?", "asking price"),),
            ),
            ScriptedTurn(
                speaker="B",
                text="We were hoping for $420,000.",
                resolutions=(
                    Resolution("What is the asking price?", "$420,000.", "$420,000"),
                ),
            ),
            ScriptedTurn(
                speaker="A",
                text="Noted. I'll compare that against recent sales in the county.",
                shares=(
                    Share("What will the appraisal compare against?",
                          "Recent sales in the county.", "comparison basis",
                          "county sales"),
                ),
            ),
            ScriptedTurn(speaker="B", text="Thank you, take all the time you need."),
        ),
    ),
)

_PLUMBER = ScriptedScenario(
    description="Customer talks to plumber in order to schedule a pipe repair",
    info_types=("problem", "address", "hourly rate", "appointment time"),
    dialogues=(
        (
            ScriptedTurn(
                speaker="A",
                text="Hi, my kitchen sink has been leaking since Tuesday.",
                shares=(
                    Share("What is the problem?", "A leaking kitchen sink.",
                          "problem", "leaking sink"),
                    Share("When did the problem start?", "Since Tuesday.",
                          "start day", "Tuesday"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="I can help with that. What's your address?",
                requests=(Request("What is the customer's address?", "address"),),
            ),
            ScriptedTurn(
                speaker="A",
                text="I'm at 14 Maple Street, apartment 3.",
                resolutions=(
                    Resolution("What is the customer's address?",
                               "14 Maple Street, apartment 3.", "14 Maple Street #3"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Got it. I charge $95 an hour; is tomorrow at 10 okay?",
                shares=(
                    Share("What is the hourly rate?", "$95 an hour.",
                          "hourly rate", "$95"),
                ),
                requests=(
                    Request("Is tomorrow at 10 acceptable?", "appointment confirmed"),
                ),
            ),
            ScriptedTurn(
                speaker="A",
                text="Tomorrow at 10 works for me.",
                resolutions=(
                    Resolution("Is tomorrow at 10 acceptable?",
                               "Yes, tomorrow at 10 works.", "yes"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Perfect, I'll bring a replacement trap just in case.",
                shares=(
                    Share("What will the plumber bring?", "A replacement trap.",
                          "parts to bring", "replacement trap"),
                ),
            ),
        ),
        (
            ScriptedTurn(
                speaker="A",
                text="Good morning, our water heater stopped working overnight.",
                shares=(
                    Share("What appliance is broken?", "The water heater.",
                          "broken appliance", "water heater"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Sorry to hear that. Is it gas or electric?",
                requests=(Request("Is the heater gas or electric?", "heater type"),),
            ),
            ScriptedTurn(
                speaker="A",
                text="It's a gas model, about eight years old.",
                shares=(
                    Share("How old is the heater?", "About eight years old.",
                          "heater age", "8 years"),
                ),
                resolutions=(
                    Resolution("Is the heater gas or electric?",
                               "It's a gas model.", "gas"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="For a gas model that age, replacement may beat repair; a new unit runs $1,200 installed.",
                shares=(
                    Share("What does a new unit cost?", "$1,200 installed.",
                          "replacement cost", "$1,200"),
                ),
            ),
            ScriptedTurn(
                speaker="A",
                text="Could you come give us a quote on Friday?",
                requests=(Request("When should the visit happen?", "visit day"),),
            ),
            ScriptedTurn(
                speaker="B",
                text="Friday afternoon works, say 2 pm.",
                resolutions=(
                    Resolution("When should the visit happen?",
                               "Friday afternoon at 2 pm.", "Friday 2 pm"),
                ),
            ),
            ScriptedTurn(
                speaker="A",
                text="Great, see you then at our place on Cedar Lane.",
                shares=(
                    Share("Where is the customer located?", "On Cedar Lane.",
                          "customer street", "Cedar Lane"),
                ),
            ),
            ScriptedTurn(speaker="B", text="See you Friday."),
        ),
    ),
)

_VET = ScriptedScenario(
    description="Pet owner talks to veterinarian in order to book a check-up",
    info_types=("pet breed", "appointment type", "appointment time", "visit fee"),
    dialogues=(
        (
            ScriptedTurn(
                speaker="A",
                text="Hello, I'd like to book a check-up for my beagle, Daisy.",
                shares=(
                    Share("What kind of appointment is needed?", "A check-up.",
                          "appointment type", "checkup"),
                    Share("What breed is the pet?", "A beagle.",
                          "pet breed", "beagle"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Of course. How old is Daisy?",
                requests=(Request("How old is the pet?", "pet age"),),
            ),
            ScriptedTurn(
                speaker="A",
                text="She just turned four.",
                resolutions=(
                    Resolution("How old is the pet?", "She just turned four.", "4"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Is she due for any vaccinations as well?",
                requests=(Request("Are vaccinations needed?", "vaccinations needed"),),
            ),
            ScriptedTurn(
                speaker="A",
                text="Yes, her rabies booster is due this month.",
                resolutions=(
                    Resolution("Are vaccinations needed?",
                               "Yes, a rabies booster.", "rabies booster"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="We can do Thursday at 9; the visit fee is $60.",
                shares=(
                    Share("When is the appointment?", "Thursday at 9.",
                          "appointment time", "Thursday 9 am"),
                    Share("What is the visit fee?", "$60.", "visit fee", "$60"),
                ),
            ),
        ),
        (
            ScriptedTurn(
                speaker="A",
                text="Hi, my cat Pixel has been sneezing all week.",
                shares=(
                    Share("What symptom does the pet have?", "Sneezing all week.",
                          "symptom", "sneezing"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Poor Pixel. Has he been eating normally?",
                requests=(Request("Is the pet eating normally?", "eating normally"),),
            ),
            ScriptedTurn(
                speaker="A",
                text="His appetite is fine, just the sneezes.",
                resolutions=(
                    Resolution("Is the pet eating normally?",
                               "Yes, appetite is fine.", "yes"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Any discharge from his eyes or nose?",
                requests=(Request("Is there any discharge?", "discharge present"),),
            ),
            ScriptedTurn(
                speaker="A",
                text="A little from the nose, clear though.",
                resolutions=(
                    Resolution("Is there any discharge?",
                               "A little clear discharge from the nose.",
                               "clear nasal"),
                ),
            ),
            ScriptedTurn(
                speaker="B",
                text="Let's schedule a check-up for tomorrow at 11 then.",
                shares=(
                    Share("What kind of appointment is needed?", "A check-up.",
                          "appointment type", "checkup"),
                    Share("When is the appointment?", "Tomorrow at 11.",
                          "appointment time", "tomorrow 11 am"),
                ),
            ),
        ),
    ),
)


def demo_scenarios() -> tuple[ScriptedScenario, ...]:
    return (_LAND_SURVEY, _PLUMBER, _VET)
