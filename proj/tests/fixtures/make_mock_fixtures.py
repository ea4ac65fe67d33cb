"""Writes mock_corpus.jsonl and mock_script.json.

The script maps each target message text to the raw output a scripted model
returns under each prompt variant. Keys: BASIC, MATH_AWARE, and optionally
SEGMENT_AWARE:MATH / SEGMENT_AWARE:NON-MATH (falling back to MATH_AWARE).
A missing variant key means an empty response.
"""
import json
import pathlib

HERE = pathlib.Path(__file__).parent


def det(*pairs):
    return json.dumps([{"text": t, "type": ty} for t, ty in pairs])


# (role, text, gold [(surface, type)], script)
TRANSCRIPTS = {
    "mock-01": [
        ("Volunteer", "Hi Marisol, ready to work on linear equations today?", [("Marisol", "PERSON")],
         {"BASIC": det(("Marisol", "PERSON")), "MATH_AWARE": det(("Marisol", "PERSON"))}),
        ("Student", "yes i have homework from Ms. Okafor", [("Okafor", "PERSON")],
         {"BASIC": det(("Okafor", "PERSON")), "MATH_AWARE": det(("Okafor", "PERSON"))}),
        ("Volunteer", "Solve the equation 2x + 5 = 11 for x.", [],
         {"BASIC": det(("2x + 5 = 11", "DATE")), "MATH_AWARE": ""}),
        ("Student", "subtract 5 from both sides so 2x = 6 and x = 3", [],
         {"BASIC": det(("2x = 6", "DATE")), "MATH_AWARE": ""}),
        ("Volunteer", "Exactly, divide both sides by 2 to isolate the variable.", [], {}),
        ("Student", "cool thanks, see you next week", [], {}),
    ],
    "mock-02": [
        ("Volunteer", "Good evening! What grade are you in?", [], {}),
        ("Student", "im in 8th grade at Roosevelt Middle", [("8th grade", "GRADE_LEVEL"), ("Roosevelt Middle", "SCHOOL")],
         {"BASIC": det(("8th grade", "GRADE_LEVEL"), ("Roosevelt Middle", "SCHOOL")),
          "MATH_AWARE": det(("8th grade", "GRADE_LEVEL"), ("Roosevelt Middle", "SCHOOL"))}),
        ("Volunteer", "Let's simplify the fraction 12/16 to lowest terms.", [],
         {"BASIC": det(("12/16", "DATE")), "MATH_AWARE": det(("12/16", "DATE")),
          "SEGMENT_AWARE:MATH": ""}),
        ("Student", "divide numerator and denominator by 4 so 3/4", [],
         {"BASIC": det(("3/4", "DATE")), "MATH_AWARE": "",
          "SEGMENT_AWARE:NON-MATH": ""}),
        ("Volunteer", "Right, the greatest common factor of 12 and 16 is 4.", [], {}),
    ],
    "mock-03": [
        ("Student", "hello my name is Dmitri", [("Dmitri", "PERSON")],
         {"BASIC": "```json\n" + det(("Dmitri", "PERSON")) + "\n```",
          "MATH_AWARE": "Here is the result:\n" + det(("Dmitri", "PERSON"))}),
        ("Volunteer", "Nice to meet you Dmitri, what are we studying?", [("Dmitri", "PERSON")],
         {"BASIC": det(("Dmitri", "PERSON")), "MATH_AWARE": det(("dmitri", "PERSON"))}),
        ("Student", "the point is (1, 3) and I need the slope to (4, 9)", [],
         {"BASIC": det(("1, 3", "US_DRIVER_LICENSE"), ("4, 9", "US_DRIVER_LICENSE")),
          "MATH_AWARE": det(("1, 3", "US_DRIVER_LICENSE")),
          "SEGMENT_AWARE:MATH": ""}),
        ("Volunteer", "slope is rise over run so (9 - 3) / (4 - 1) = 2", [],
         {"BASIC": det(("9 - 3", "PHONE_NUMBER")), "MATH_AWARE": "none found"}),
        ("Student", "so the slope is 2 got it", [], {"BASIC": "[]", "MATH_AWARE": "[]"}),
    ],
    "mock-04": [
        ("Volunteer", "Welcome! Which course is this for?", [], {}),
        ("Student", "algebra 300 with Mr. Haddad", [("algebra 300", "COURSE_NUMBER"), ("Haddad", "PERSON")],
         {"BASIC": det(("algebra 300", "COURSE"), ("Haddad", "PERSON")),
          "MATH_AWARE": det(("algebra 300", "COURSE"), ("Haddad", "PERSON"))}),
        ("Volunteer", "Great, the quadratic x^2 - 5x + 6 = 0 factors nicely.", [],
         {"BASIC": det(("5x + 6", "US_SSN")), "MATH_AWARE": ""}),
        ("Student", "(x - 2)(x - 3) so roots 2 and 3", [],
         {"BASIC": det(("2 and 3", "DATE")), "MATH_AWARE": det(("2 and 3", "DATE")),
          "SEGMENT_AWARE:MATH": ""}),
        ("Volunteer", "Correct, check by plugging the roots back in.", [], {}),
        ("Student", "thanks!! bye", [], {}),
    ],
    "mock-05": [
        ("Student", "can you help with my probability worksheet", [], {}),
        ("Volunteer", "Sure, what is P(A) if there are 3 red and 5 blue marbles?", [],
         {"BASIC": det(("3 red and 5 blue", "US_BANK_NUMBER")), "MATH_AWARE": ""}),
        ("Student", "3/8 because 3 out of 8 total", [],
         {"BASIC": det(("3/8", "DATE")), "MATH_AWARE": ""}),
        ("Volunteer", "Yes. My cat Pythagoras agrees, by the way.", [], {
            "BASIC": det(("Pythagoras", "PERSON")), "MATH_AWARE": ""}),
        ("Student", "lol. my tutor last year was Priyanka", [("Priyanka", "PERSON")],
         {"BASIC": det(("Priyanka", "PERSON")), "MATH_AWARE": det(("Priyanka", "PERSON"))}),
    ],
    "mock-06": [
        ("Volunteer", "Hi there, how is Denver treating you?", [("Denver", "LOCATION")],
         {"BASIC": det(("Denver", "LOCATION")), "MATH_AWARE": det(("Denver", "LOCATION"))}),
        ("Student", "cold lol. I have a test on 03/14", [("03/14", "DATE")],
         {"BASIC": det(("03/14", "DATE")), "MATH_AWARE": det(("03/14", "DATE"))}),
        ("Volunteer", "Let's review: the area of a circle with radius 3 is 9 pi.", [],
         {"BASIC": det(("9 pi", "DATE")), "MATH_AWARE": ""}),
        ("Student", "and the circumference is 6 pi", [],
         {"BASIC": "{\"text\": \"6 pi\", \"type\": \"DATE\"", "MATH_AWARE": ""}),
        ("Volunteer", "Perfect. Good luck on the test!", [], {}),
    ],
    "mock-07": [
        ("Student", "I go to PS 118 and I am 13", [("PS 118", "SCHOOL"), ("13", "AGE")],
         {"BASIC": det(("PS 118", "SCHOOL"), ("13", "AGE")),
          "MATH_AWARE": det(("PS 118", "SCHOOL"))}),
        ("Volunteer", "Cool! Let's compute the mean of 4, 8, 15, 16 and 23.", [],
         {"BASIC": det(("4, 8, 15, 16", "PHONE_NUMBER")), "MATH_AWARE": "",
          "SEGMENT_AWARE:MATH": ""}),
        ("Student", "sum is 66 divided by 5 is 13.2", [],
         {"BASIC": det(("13.2", "AGE")), "MATH_AWARE": ""}),
        ("Volunteer", "Exactly right, the median is 15.", [], {}),
    ],
    "mock-08": [
        ("Volunteer", "Hello! Email me at coach.lena@example.org if you get stuck.",
         [("coach.lena@example.org", "EMAIL_ADDRESS")],
         {"BASIC": det(("coach.lena@example.org", "EMAIL_ADDRESS")),
          "MATH_AWARE": det(("coach.lena@example.org", "EMAIL_ADDRESS"))}),
        ("Student", "ok. what is 7 times 8 again", [], {"BASIC": "   ", "MATH_AWARE": ""}),
        ("Volunteer", "7 times 8 is 56, and 56 divided by 7 is 8.", [],
         {"BASIC": det(("56", "AGE"), ("8", "AGE"), ("junk", "NOT_A_TYPE")), "MATH_AWARE": ""}),
        ("Student", "thx Lena", [("Lena", "PERSON")],
         {"BASIC": det(("Lena", "PERSON")), "MATH_AWARE": det(("Lena", "PERSON"))}),
    ],
}


def main():
    corpus_lines = []
    script = []
    seen = set()
    for sid, msgs in TRANSCRIPTS.items():
        messages = []
        for i, (role, text, gold, responses) in enumerate(msgs):
            assert text.isascii()
            assert text not in seen, text
            seen.add(text)
            labels = []
            for surface, ty in gold:
                pos = text.index(surface)
                labels.append({"start": pos, "end": pos + len(surface), "type": ty})
            messages.append({"index": i, "role": role, "text": text, "labels": labels})
            if responses:
                script.append({"text": text, **responses})
        corpus_lines.append(json.dumps({"session_id": sid, "messages": messages}, separators=(",", ":")))
    (HERE / "mock_corpus.jsonl").write_text("\n".join(corpus_lines) + "\n")
    (HERE / "mock_script.json").write_text(json.dumps(script, indent=2) + "\n")


if __name__ == "__main__":
    main()
