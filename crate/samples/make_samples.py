"""Regenerates the bundled sample corpora. Output is fully determined by the
fixed seed, so rerunning leaves the committed files unchanged."""

import json
import random
from pathlib import Path

HERE = Path(__file__).parent
rng = random.Random(3442)

PLACES = ["the library", "the station", "Green Park", "the office", "the mall",
          "the harbour", "the gym", "the museum", "the clinic", "the bakery",
          "the airport", "the garage", "the cinema", "the market", "the school"]
FOODS = ["pasta", "sushi", "tacos", "soup", "curry", "pancakes", "salad",
         "noodles", "pizza", "dumplings", "burgers", "omelettes"]
TIMES = ["at nine", "after lunch", "on Friday", "tomorrow morning", "tonight",
         "next week", "around six", "on Sunday", "before noon", "this evening"]
THINGS = ["the tickets", "my laptop", "the keys", "a new phone", "the report",
          "the invoice", "an umbrella", "the charger", "the contract", "a gift",
          "the passport", "the parcel", "the receipt", "a blue jacket"]
NUMBERS = ["two", "three", "four", "five", "ten", "twelve", "twenty", "forty"]

TOPICS = {
    "plans": [
        "Are you free {time}? I thought we could meet at {place}.",
        "I can make it {time}, but I need to pick up {thing} first.",
        "Should we grab some {food} afterwards?",
        "Sure, there is a nice place near {place} that serves {food}.",
        "I will bring {thing} so we do not forget it again.",
        "Let us say {number} people, I invited a few friends from work.",
        "Great, I will book a table for {number} {time}.",
        "Do you know if {place} is open {time}?",
        "I checked and it closes late, so we have plenty of time.",
        "Perfect, see you {time} then.",
        "Can you remind me to bring {thing}?",
        "I might be {number} minutes late because of traffic.",
    ],
    "support": [
        "Hello, I ordered {thing} last week and it has not arrived.",
        "I am sorry to hear that. Could you give me your order number?",
        "It is {number} {number} {number}, placed {time}.",
        "Thank you. I can see the parcel is waiting at {place}.",
        "Why was it sent there instead of my home address?",
        "The courier could not reach you, so they left it at {place}.",
        "Can you send it again {time}? I will be at home.",
        "Of course, I have scheduled a new delivery {time}.",
        "Will I be charged for the second delivery?",
        "No, the redelivery is free. Is there anything else?",
        "Yes, I also want to return {thing} from an earlier order.",
        "I have emailed you a return label for {thing}.",
    ],
    "work": [
        "Did you finish {thing} for the client?",
        "Almost, I still need {number} more figures from finance.",
        "They promised to send them {time}.",
        "The meeting at {place} was moved to {time}.",
        "Then we should send the draft before the meeting.",
        "I will ask the team to review {thing} today.",
        "Please also check the budget, it looks {number} percent too high.",
        "I noticed that too, the travel costs doubled.",
        "Let us discuss it over {food} {time}.",
        "Good idea, I will bring the printed copy of {thing}.",
        "Did the manager approve the new schedule?",
        "Not yet, she is at {place} until {time}.",
    ],
    "health": [
        "I have had a headache since {time}.",
        "Have you been drinking enough water?",
        "Probably not, I only had coffee and {food}.",
        "You should see someone at {place} if it gets worse.",
        "I booked an appointment {time} just in case.",
        "Take {thing} with you, they may ask for it.",
        "The doctor said I should rest for {number} days.",
        "Then stay home and I will bring you some {food}.",
        "That is kind of you, thank you.",
        "Do you need anything from {place} on the way?",
        "Maybe some fruit and {thing} if it is not too much trouble.",
        "No trouble at all, I will be there {time}.",
    ],
}


def fill(template):
    out = template
    for slot, pool in (("{place}", PLACES), ("{food}", FOODS), ("{time}", TIMES),
                       ("{thing}", THINGS), ("{number}", NUMBERS)):
        while slot in out:
            out = out.replace(slot, rng.choice(pool), 1)
    return out


def make_turns(topic, n):
    templates = rng.sample(TOPICS[topic], n)
    return [fill(t) for t in templates]


def fancy(text):
    """Sprinkles typographic punctuation that ingest normalizes away."""
    r = rng.random()
    if r < 0.15:
        return text.replace("I ", "I’m sure I ", 1) if "I " in text else text + " …"
    if r < 0.25:
        return "“" + text + "”"
    if r < 0.32:
        return text.replace(", ", " — ", 1)
    if r < 0.36:
        return text.replace(" ", "  ​", 1)
    return text


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=False) + "\n")


# Row layout: one utterance per line, DialogSum-style placeholder speakers.
rows = []
chat = []
topics = list(TOPICS)
for i in range(24):
    topic = topics[i % len(topics)]
    n = rng.randint(5, 10)
    utts = make_turns(topic, n)
    chat.append(utts)
for i, utts in enumerate(chat):
    did = f"c{i:03d}"
    for j, u in enumerate(utts):
        speaker = "#Person1#" if j % 2 == 0 else "#Person2#"
        if i % 7 == 3 and j == 1:
            # A split turn: the same speaker twice in a row.
            rows.append({"dialog_id": did, "speaker": "#Person1#", "utterance": "Oh, and one more thing."})
            speaker = "#Person1#"
        if i % 9 == 4 and speaker == "#Person2#":
            speaker = "person2"
        rows.append({"dialog_id": did, "speaker": speaker, "utterance": fancy(u)})

# Planted cases in the row file.
def add_dialogue(did, utts):
    for j, u in enumerate(utts):
        rows.append({"dialog_id": did, "speaker": "#Person1#" if j % 2 == 0 else "#Person2#", "utterance": u})

add_dialogue("c024", chat[2])                       # exact duplicate of c002
near = list(chat[5])
near[0] = near[0] + " really"
add_dialogue("c025", near)                          # near duplicate of c005
add_dialogue("c026", make_turns("plans", 3))        # too few turns
add_dialogue("c027", ["Hi.", "Hello there.", "Bye now.", "See you."])  # too few tokens
rows.append({"dialog_id": "c028", "speaker": "#Person1#", "utterance": "   "})
rows.append({"dialog_id": "c028", "speaker": "#Person2#", "utterance": "​"})  # all empty
add_dialogue("c029", ["Please type <mask> here.", "Done.", "Thanks a lot, that fixed it.", "Great."])
write_jsonl(HERE / "raw" / "chat_rows.jsonl", rows)

# Dialogue layout: one conversation per line.
convs = []
meet = []
for i in range(14):
    topic = topics[(i + 1) % len(topics)]
    utts = make_turns(topic, rng.randint(4, 9))
    if i % 5 == 2:
        speakers = ["Agent", "Customer", "Supervisor"]
    else:
        speakers = ["Agent", "Customer"]
    turns = []
    for j, u in enumerate(utts):
        who = speakers[j % len(speakers)]
        turns.append({"who": who, "said": fancy(u)})
    meet.append(turns)
    convs.append({"conv_id": f"m{i:02d}", "turns": turns})
convs.append({"conv_id": "m14", "turns": meet[0]})                 # exact duplicate
convs.append({"conv_id": "m15", "turns": meet[3][:3]})             # too few turns
convs.append({"conv_id": "m16", "turns": [dict(t, said=t["said"] + "!") for t in meet[6]]})  # near duplicate
convs.append({"conv_id": "m17", "turns": [{"who": "Agent", "said": "Hi"}, {"who": "Customer", "said": "Hi"},
                                          {"who": "Agent", "said": "Ok"}, {"who": "Customer", "said": "Ok"}]})
extra = make_turns("health", 6)
convs.append({"conv_id": "m18", "turns": [{"who": "Danny", "said": u} if k % 2 == 0 else {"who": "Alejandra", "said": u}
                                          for k, u in enumerate(extra)]})
extra = make_turns("work", 7)
convs.append({"conv_id": "m19", "turns": [{"who": "Cust. Service", "said": u} if k % 2 == 0 else {"who": "Customer", "said": u}
                                          for k, u in enumerate(extra)]})
write_jsonl(HERE / "raw" / "meetings.jsonl", convs)

# Evaluation set used for leakage removal: one dialogue copies c012.
eval_rows = []
def corpus_dialogue(did, dataset, roles, turns):
    return {"schema_version": 1, "id": did, "source_dataset": dataset, "roles": roles,
            "turns": [{"role_index": r, "text": t} for r, t in turns]}
norm = lambda s: " ".join(s.split())
eval_rows.append(corpus_dialogue("eval:0", "evalset", ["#Person1#", "#Person2#"],
                                 [(j % 2, norm(u)) for j, u in enumerate(chat[12])]))
for k in range(3):
    utts = make_turns(topics[k], 6)
    eval_rows.append(corpus_dialogue(f"eval:{k + 1}", "evalset", ["#Person1#", "#Person2#"],
                                     [(j % 2, u) for j, u in enumerate(utts)]))
write_jsonl(HERE / "eval_dialogues.jsonl", eval_rows)

# Parallel sample: named speakers with summaries that mention them.
NAMES = ["Danny", "Alejandra", "Priya", "Tom", "Marco", "Lena", "Omar", "Grace",
         "Hugo", "Nina", "Felix", "Sara"]
SUMMARY = {
    "plans": "{a} and {b} plan to meet at {place} {time} and eat {food}.",
    "support": "{b} helps {a} with a delayed delivery of {thing}.",
    "work": "{a} and {b} discuss {thing} before the meeting {time}.",
    "health": "{a} feels unwell and {b} offers to bring {food}.",
}
par = []
for i in range(50):
    topic = topics[i % len(topics)]
    a, b = rng.sample(NAMES, 2)
    utts = make_turns(topic, rng.randint(4, 8))
    if rng.random() < 0.5:
        utts[0] = f"Hi {b}, " + utts[0][0].lower() + utts[0][1:]
    turns = [(j % 2, u) for j, u in enumerate(utts)]
    summ = fill(SUMMARY[topic].replace("{a}", a).replace("{b}", b))
    summaries = [{"text": summ, "origin": "annotated"}]
    if i % 3 == 0:
        summaries.append({"text": f"{a} talks with {b}.", "origin": "reference"})
    if i % 10 == 9:
        summaries = [{"text": f"{a} and {b} talk about {topic}.", "origin": "reference"}]
    row = corpus_dialogue(f"par:{i:03d}", "sample-" + topic, [a, b], turns)
    row["summaries"] = summaries
    par.append(row)
write_jsonl(HERE / "parallel.jsonl", par)

# Candidate and reference files for eval.
cands, refs = [], []
for row in par[:20]:
    text = row["summaries"][0]["text"]
    words = text.split()
    cand = " ".join(words[: max(3, len(words) - 2)])
    cands.append({"id": row["id"], "text": cand})
    refs.append({"id": row["id"], "references": [s["text"] for s in row["summaries"]][:1]})
write_jsonl(HERE / "candidates.jsonl", cands)
write_jsonl(HERE / "references.jsonl", refs)
