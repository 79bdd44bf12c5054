#!/usr/bin/env python3
"""Generate the bundled "food delivery" replay corpus.

Fourteen days (2024-10-01..14) of documents for five sources. Every day has
matching documents from every source; the positive share drifts down over the
window. Each source also carries documents that must be filtered or merged:
off-topic posts, posts outside the window, tracking-parameter duplicates of an
earlier URL, and posts with only a fetch time.

Output is deterministic for a given --seed.
"""
import argparse
import datetime as dt
import json
import os
import random

START = dt.date(2024, 10, 1)
DAYS = 14

HEADLINE_SUBJECTS = [
    "Food delivery apps", "The food delivery market", "Food delivery platforms",
    "Regional food delivery startups", "Food delivery couriers", "Big food delivery brands",
]
NEWS_POSITIVE = [
    "report strong quarterly growth as order volumes surge",
    "win praise for faster and more reliable service",
    "roll out affordable meal bundles that customers love",
    "improve courier pay in a welcome move for riders",
    "post impressive gains in customer satisfaction surveys",
    "expand to new cities with a smooth and successful launch",
]
NEWS_NEGATIVE = [
    "face complaints over late and cold orders",
    "hit by a weekend outage that left customers frustrated",
    "draw criticism after couriers protest unfair pay",
    "fined over misleading fees in a consumer lawsuit",
    "struggle with rising costs and disappointing margins",
    "warned about hidden charges and poor refund handling",
]
NEWS_NEUTRAL = [
    "publish updated delivery zones for the autumn season",
    "announce a change to opening hours in several districts",
    "confirm a meeting with city officials next month",
    "update their terms of service for restaurant partners",
]
NEWS_BODY_POSITIVE = [
    "Analysts said the results were better than expected and the outlook is bright.",
    "Customers described the experience as quick, friendly and convenient.",
    "Restaurant partners said the new tools are helpful and easy to use.",
    "Riders welcomed the change and called it a fair improvement.",
]
NEWS_BODY_NEGATIVE = [
    "Several customers said their meals arrived soggy, cold and late.",
    "Critics called the fee structure confusing and unfair to small restaurants.",
    "Riders said the app crashed repeatedly during the busy dinner rush.",
    "Consumer groups warned that the refund process is slow and frustrating.",
]
NEWS_BODY_NEUTRAL = [
    "The company said further details will be shared in the coming weeks.",
    "The change applies to orders placed through the mobile app.",
    "Officials will review the proposal at a scheduled session.",
]
SOCIAL_POSITIVE = [
    "Honestly the food delivery tonight was amazing, hot and fresh in twenty minutes!",
    "Shoutout to my food delivery rider, super friendly and quick. Love it.",
    "Food delivery saved my evening, tasty ramen and a polite courier.",
    "Great deal on food delivery today, cheap and really delicious.",
    "Best food delivery experience so far, everything was perfect.",
]
SOCIAL_NEGATIVE = [
    "Food delivery took ninety minutes and the fries were cold and soggy. Awful.",
    "Not happy with food delivery fees lately, so expensive for a tiny order.",
    "My food delivery order was wrong again and support was rude. Terrible.",
    "Food delivery app crashed twice at checkout, so annoying.",
    "Worst food delivery night ever, missing items and no refund.",
]
SOCIAL_NEUTRAL = [
    "Trying a new food delivery app this weekend, will see how it goes.",
    "Anyone know which food delivery service covers the north side?",
    "Ordered food delivery for the team meeting at noon.",
]
SEARCH_POSITIVE = [
    ("Top rated food delivery services this month",
     "A guide to the best food delivery options with fast, reliable couriers and excellent reviews."),
    ("Cheap food delivery deals worth trying",
     "Affordable food delivery promotions with free delivery and friendly support."),
]
SEARCH_NEGATIVE = [
    ("Food delivery complaints: what to do when orders go wrong",
     "Common problems include late, cold or missing items and poor refund handling."),
    ("Why food delivery fees feel so high",
     "Hidden service charges and surge pricing leave many customers disappointed."),
]
SEARCH_NEUTRAL = [
    ("How food delivery works",
     "An overview of ordering, dispatch and courier routing for food delivery."),
    ("Food delivery coverage map",
     "Check which districts are served and typical delivery windows."),
]
OFF_TOPIC = [
    ("Local bakery wins regional bread award", "The judges praised the sourdough and the friendly staff."),
    ("City council approves new bike lanes", "Construction starts next spring on the main avenue."),
    ("Weekend weather: sunny with light winds", "Temperatures stay mild through Sunday evening."),
]

SOURCES = {
    "bing_news": {"kind": "news", "host": "https://news.example-bing.test", "per_day": (3, 4)},
    "google_news": {"kind": "news", "host": "https://news.example-google.test", "per_day": (3, 4)},
    "google_search": {"kind": "search", "host": "https://search.example-google.test", "per_day": (2, 3)},
    "twitter": {"kind": "social", "host": "https://x.example-twitter.test", "per_day": (4, 6)},
    "yahoo_hot": {"kind": "social", "host": "https://hot.example-yahoo.test", "per_day": (3, 4)},
}


def positive_share(day_index):
    return 0.62 - 0.025 * day_index


def pick_tone(rng, day_index):
    r = rng.random()
    p = positive_share(day_index)
    if r < p:
        return "pos"
    if r < p + 0.15:
        return "neu"
    return "neg"


def stamp(day, rng, hour_lo=6, hour_hi=22):
    t = dt.datetime.combine(day, dt.time(rng.randint(hour_lo, hour_hi), rng.randint(0, 59), rng.randint(0, 59)))
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def fetched(published):
    t = dt.datetime.strptime(published, "%Y-%m-%dT%H:%M:%SZ") + dt.timedelta(hours=2)
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def make_doc(rng, source, cfg, day, day_index, serial):
    tone = pick_tone(rng, day_index)
    kind = cfg["kind"]
    if kind == "news":
        pools = {"pos": (NEWS_POSITIVE, NEWS_BODY_POSITIVE), "neg": (NEWS_NEGATIVE, NEWS_BODY_NEGATIVE),
                 "neu": (NEWS_NEUTRAL, NEWS_BODY_NEUTRAL)}[tone]
        title = f"{rng.choice(HEADLINE_SUBJECTS)} {rng.choice(pools[0])}"
        body = " ".join(rng.sample(pools[1], 2))
        path = f"/articles/{day.isoformat()}/{serial:03d}"
    elif kind == "search":
        pool = {"pos": SEARCH_POSITIVE, "neg": SEARCH_NEGATIVE, "neu": SEARCH_NEUTRAL}[tone]
        title, body = rng.choice(pool)
        path = f"/results/{day.isoformat()}/{serial:03d}"
    else:
        pool = {"pos": SOCIAL_POSITIVE, "neg": SOCIAL_NEGATIVE, "neu": SOCIAL_NEUTRAL}[tone]
        title, body = "", rng.choice(pool)
        path = f"/status/{day.strftime('%Y%m%d')}{serial:03d}"
    published = stamp(day, rng)
    return {
        "url": cfg["host"] + path,
        "source_id": source,
        "title": title,
        "body": body,
        "published_at": published,
        "fetched_at": fetched(published),
    }


def source_docs(rng, source, cfg):
    docs = []
    serial = 0
    for i in range(DAYS):
        day = START + dt.timedelta(days=i)
        for _ in range(rng.randint(*cfg["per_day"])):
            serial += 1
            docs.append(make_doc(rng, source, cfg, day, i, serial))

    # Off-topic documents inside the window.
    for j, (title, body) in enumerate(OFF_TOPIC):
        day = START + dt.timedelta(days=2 + 4 * j)
        published = stamp(day, rng)
        docs.append({"url": f"{cfg['host']}/misc/{day.isoformat()}/{j}", "source_id": source, "title": title,
                     "body": body, "published_at": published, "fetched_at": fetched(published)})

    # Matching documents just outside the window.
    for day in (START - dt.timedelta(days=3), START + dt.timedelta(days=DAYS + 1)):
        serial += 1
        docs.append(make_doc(rng, source, cfg, day, 0, serial))

    # A tracking-parameter duplicate of an earlier document, published later.
    original = docs[rng.randint(0, 5)]
    dup = dict(original)
    dup["url"] = original["url"] + "?utm_source=feed&utm_medium=social"
    later = dt.datetime.strptime(original["published_at"], "%Y-%m-%dT%H:%M:%SZ") + dt.timedelta(minutes=30)
    dup["published_at"] = later.strftime("%Y-%m-%dT%H:%M:%SZ")
    dup["fetched_at"] = fetched(dup["published_at"])
    docs.append(dup)

    # A matching document with no publish time; its day comes from fetched_at.
    serial += 1
    undated = make_doc(rng, source, cfg, START + dt.timedelta(days=9), 9, serial)
    undated["fetched_at"] = undated.pop("published_at")
    undated["published_at"] = None
    docs.append(undated)

    rng.shuffle(docs)
    return docs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/fixtures/food_delivery")
    ap.add_argument("--seed", type=int, default=20241001)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for source, cfg in SOURCES.items():
        rng = random.Random(f"{args.seed}:{source}")
        docs = source_docs(rng, source, cfg)
        path = os.path.join(args.out, f"{source}.jsonl")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for d in docs:
                f.write(json.dumps(d, sort_keys=True, ensure_ascii=False) + "\n")
        print(f"{path}: {len(docs)} documents")


if __name__ == "__main__":
    main()
