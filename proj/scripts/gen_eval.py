#!/usr/bin/env python3
"""Generate data/eval/food_reviews_200.jsonl: 100 positive and 100 negative
delivery reviews as NDJSON {text, label}.

Reviews are assembled from hand-written sentences. A share of them is
deliberately hard for a lexicon scorer: mixed opinions, negated praise or
complaints, and plain statements with no opinion words. Labels follow the
reviewer's overall verdict, not the scorer.
"""
import argparse
import json
import os
import random

POS_OPEN = [
    "Great service tonight.", "Really happy with this order.", "The food arrived hot and fresh.",
    "Excellent as always.", "Our courier was friendly and quick.", "Lovely meal, well packed.",
    "Best curry I have had from an app.", "Delivery was fast and the driver was polite.",
    "Five stars from me.", "Everything was perfect.",
]
POS_DETAIL = [
    "The noodles were delicious and still warm.", "Portions were generous for the price.",
    "The pizza was crispy and the toppings were fresh.", "Tracking was accurate to the minute.",
    "Support fixed a small mistake in seconds.", "The packaging kept the soup from spilling.",
    "Good value and a nice selection of vegetarian dishes.", "The burger was juicy and tasty.",
    "I love that they include extra sauce.", "Would definitely recommend to friends.",
]
NEG_OPEN = [
    "Terrible experience.", "The order was late and cold.", "Really disappointed this time.",
    "Worst delivery I have had.", "Awful service.", "The driver was rude at the door.",
    "Food arrived soggy and stale.", "Never again.", "Half the order was missing.",
    "Overpriced and slow.",
]
NEG_DETAIL = [
    "The fries were limp and greasy.", "Support ignored my refund request for days.",
    "The app crashed twice while I was paying.", "My drink had spilled all over the bag.",
    "The rice was bland and dry.", "They charged a hidden fee at checkout.",
    "Tracking said delivered an hour before it arrived.", "The pasta was cold in the middle.",
    "I hate waiting this long for lunch.", "The wrong dish came and nobody answered the phone.",
]
POS_HARD = [
    "Not bad at all, the ramen was not too salty.",
    "I was worried it would be late but it came early.",
    "Arrived at seven and we ate everything.",
    "The driver found our building without calling, which never happens.",
    "No complaints, will order again.",
    "It was cheaper than going out and the kids finished every bite.",
    "Slightly late, but the food was excellent.",
    "Packaging was a bit messy though the curry was wonderful.",
]
NEG_HARD = [
    "Not great, not good, just sad.",
    "Waited ninety minutes for two sandwiches.",
    "The courier left it at the wrong house again.",
    "I wanted to like it but the food was not good.",
    "Nice app design, shame the meal was inedible.",
    "Friendly driver, but the order was wrong and cold.",
    "Paid twenty dollars for a small box of rice.",
    "The app says it is fast. It is not.",
]


def review(rng, label):
    if label == "positive":
        opens, details, hard = POS_OPEN, POS_DETAIL, POS_HARD
    else:
        opens, details, hard = NEG_OPEN, NEG_DETAIL, NEG_HARD
    roll = rng.random()
    if roll < 0.25:
        return rng.choice(hard)
    if roll < 0.35:
        other = NEG_DETAIL if label == "positive" else POS_DETAIL
        return " ".join([rng.choice(opens), rng.choice(other), rng.choice(details)])
    return " ".join([rng.choice(opens), rng.choice(details)])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/eval/food_reviews_200.jsonl")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    rows = [{"text": review(rng, label), "label": label} for label in ["positive"] * 100 + ["negative"] * 100]
    rng.shuffle(rows)
    os.makedirs(os.path.dirname(args.out), exist_ok=True)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")
    print(f"{len(rows)} reviews -> {args.out}")


if __name__ == "__main__":
    main()
