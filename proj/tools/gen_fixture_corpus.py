#!/usr/bin/env python3
"""Generate the synthetic test corpus and toy evaluation sets in tests/data.

The corpus is ~1e5 tokens of templated English built around four relation
families (country/capital, gender, plural, past tense) so that analogy
questions have meaningful answers. Output is deterministic for a given seed.
"""

import argparse
import random
from pathlib import Path

CAPITALS = [
    ("greece", "athens"), ("germany", "berlin"), ("france", "paris"), ("italy", "rome"),
    ("spain", "madrid"), ("japan", "tokyo"), ("china", "beijing"), ("russia", "moscow"),
    ("egypt", "cairo"), ("canada", "ottawa"), ("norway", "oslo"), ("sweden", "stockholm"),
    ("finland", "helsinki"), ("poland", "warsaw"), ("austria", "vienna"), ("portugal", "lisbon"),
    ("ireland", "dublin"), ("cuba", "havana"), ("peru", "lima"), ("kenya", "nairobi"),
    ("thailand", "bangkok"), ("hungary", "budapest"), ("denmark", "copenhagen"),
    ("turkey", "ankara"),
]
GENDER = [
    ("king", "queen"), ("man", "woman"), ("boy", "girl"), ("brother", "sister"),
    ("father", "mother"), ("son", "daughter"), ("uncle", "aunt"), ("husband", "wife"),
    ("prince", "princess"), ("nephew", "niece"), ("grandfather", "grandmother"),
    ("actor", "actress"), ("waiter", "waitress"), ("groom", "bride"), ("monk", "nun"),
    ("lord", "lady"), ("emperor", "empress"), ("hero", "heroine"),
]
PLURAL = [
    ("cat", "cats"), ("dog", "dogs"), ("horse", "horses"), ("bird", "birds"), ("tree", "trees"),
    ("car", "cars"), ("house", "houses"), ("river", "rivers"), ("book", "books"),
    ("apple", "apples"), ("bottle", "bottles"), ("window", "windows"), ("road", "roads"),
    ("flower", "flowers"), ("ship", "ships"), ("stone", "stones"), ("cloud", "clouds"),
    ("chair", "chairs"), ("garden", "gardens"), ("lamp", "lamps"), ("coin", "coins"),
    ("song", "songs"),
]
TENSE = [
    ("walk", "walked"), ("jump", "jumped"), ("play", "played"), ("look", "looked"),
    ("talk", "talked"), ("cook", "cooked"), ("paint", "painted"), ("climb", "climbed"),
    ("dance", "danced"), ("listen", "listened"), ("travel", "traveled"), ("work", "worked"),
    ("laugh", "laughed"), ("wait", "waited"), ("call", "called"), ("open", "opened"),
    ("learn", "learned"), ("visit", "visited"),
]
ADJECTIVES = (
    "old new big small red blue green dark bright quiet loud warm cold happy sad quick slow "
    "tall short young ancient modern gentle rough soft hard heavy light rich poor famous "
    "strange simple clever brave calm busy empty full early late wide narrow sweet bitter"
).split()
NOUNS = (
    "city village market bridge mountain forest lake valley island harbor castle temple "
    "school library museum station office kitchen table letter story picture music festival "
    "morning evening winter summer spring autumn journey dinner breakfast meeting window_seat "
    "teacher student doctor farmer soldier sailor painter writer singer child friend neighbor "
    "stranger crowd family garden_path lantern map key door wall roof floor field hill"
).replace("_", "").split()
FILLER_VERBS = (
    "sees finds builds keeps brings takes leaves loves hates needs wants holds carries "
    "follows watches remembers describes admires crosses"
).split()
DETERMINERS = "the a this that every some".split()


def sentence(rng: random.Random) -> str:
    kind = rng.random()
    adj, adj2 = rng.choice(ADJECTIVES), rng.choice(ADJECTIVES)
    noun, noun2 = rng.choice(NOUNS), rng.choice(NOUNS)
    if kind < 0.18:
        country, capital = rng.choice(CAPITALS)
        return rng.choice([
            f"{capital} is the capital of {country}.",
            f"the government of {country} meets in {capital} every {noun}.",
            f"visitors to {country} often stay in {capital} near the {adj} {noun}.",
            f"{capital}, the largest city in {country}, has a {adj} {noun}.",
        ])
    if kind < 0.36:
        male, female = rng.choice(GENDER)
        return rng.choice([
            f"the {male} said he was proud, and the {female} said she was proud too.",
            f"he is a {male} and she is a {female}.",
            f"the {adj} {male} spoke to his {noun} while the {female} spoke to her {noun2}.",
            f"a {male} and a {female} walked to the {adj} {noun}.",
        ])
    if kind < 0.54:
        single, plural = rng.choice(PLURAL)
        return rng.choice([
            f"one {single} is here, and two {plural} are there.",
            f"the {adj} {single} was near many {adj2} {plural}.",
            f"a single {single} is rare, but {plural} are common in the {noun}.",
            f"this {single} and those {plural} belong to the {noun}.",
        ])
    if kind < 0.70:
        verb, past = rng.choice(TENSE)
        return rng.choice([
            f"today we {verb} to the {noun}; yesterday we {past} to the {noun2}.",
            f"they often {verb} in the {adj} {noun}, and last year they {past} there.",
            f"i {verb} now, but i {past} before the {noun}.",
            f"you will {verb} tomorrow because you {past} yesterday.",
        ])
    det, det2 = rng.choice(DETERMINERS), rng.choice(DETERMINERS)
    verb = rng.choice(FILLER_VERBS)
    text = f"{det} {adj} {noun} {verb} {det2} {adj2} {noun2}."
    extra = rng.random()
    if extra < 0.05:
        text = f"<p>{text}</p>"
    elif extra < 0.08:
        text = text.replace(" ", " &amp; ", 1)
    elif extra < 0.15:
        text = text[0].upper() + text[1:]
    return text


def write_corpus(path: Path, rng: random.Random, target_tokens: int) -> int:
    tokens = 0
    lines = []
    paragraph = []
    while tokens < target_tokens:
        s = sentence(rng)
        tokens += sum(1 for w in s.replace(",", " ").replace(";", " ").split())
        paragraph.append(s)
        if len(paragraph) >= rng.randint(4, 9):
            lines.append(" ".join(paragraph))
            lines.append("")
            paragraph = []
    if paragraph:
        lines.append(" ".join(paragraph))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return tokens


def write_analogies(path: Path) -> None:
    out = []
    for name, pairs in [
        ("capital-common-countries", [(b, a) for a, b in CAPITALS]),
        ("family", GENDER),
        ("gram8-plural", PLURAL),
        ("gram7-past-tense", TENSE),
    ]:
        out.append(f": {name}")
        for i, (a, b) in enumerate(pairs):
            for c, d in pairs[i + 1:i + 6]:
                out.append(f"{a} {b} {c} {d}")
    # Questions with words outside any fixture vocabulary.
    out.append(": out-of-vocabulary")
    out.append("athens greece zanzibar tanzania")
    out.append("king queen duke duchess")
    out.append("cat cats ox oxen")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def write_similarity(path: Path, rng: random.Random) -> None:
    pairs = []
    for a, b in CAPITALS[:8] + GENDER[:8] + PLURAL[:8] + TENSE[:6]:
        pairs.append((a, b, round(rng.uniform(7.0, 9.5), 2)))
    for _ in range(30):
        a = rng.choice(NOUNS + ADJECTIVES)
        b = rng.choice([w for _, w in CAPITALS] + [w for w, _ in PLURAL])
        pairs.append((a, b, round(rng.uniform(0.5, 4.0), 2)))
    pairs += [("tiger", "jaguar", 8.0), ("cat", "panther", 6.5), ("river", "estuary", 6.1)]
    lines = ["Word 1,Word 2,Human (mean)"]
    lines += [f"{a},{b},{s}" for a, b, s in pairs]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "data")
    parser.add_argument("--seed", type=int, default=20190417)
    parser.add_argument("--tokens", type=int, default=100_000)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    n = write_corpus(args.out / "fixture_corpus.txt", rng, args.tokens)
    write_analogies(args.out / "fixture_analogies.txt")
    write_similarity(args.out / "fixture_similarity.csv", rng)
    print(f"wrote ~{n} tokens to {args.out}")


if __name__ == "__main__":
    main()
