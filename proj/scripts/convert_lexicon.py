#!/usr/bin/env python3
"""Build data/lexicon/en_sentiment.tsv from the pattern/TextBlob adjective
lexicon (PDDL) plus data/lexicon/supplement.tsv.

Senses of one form are averaged. Intensity is kept only for forms whose every
sense is an adverb (RB); everything else scores on its own. Supplement rows
only add forms the base list lacks.
"""
import argparse
import collections
import xml.etree.ElementTree as ET


def base_entries(xml_path):
    senses = collections.defaultdict(list)
    for w in ET.parse(xml_path).getroot().iter("word"):
        form = w.get("form", "").strip().lower()
        if not form or any(c.isspace() for c in form):
            continue
        senses[form].append(w)
    out = {}
    for form, ws in senses.items():
        pol = sum(float(w.get("polarity")) for w in ws) / len(ws)
        subj = sum(float(w.get("subjectivity")) for w in ws) / len(ws)
        adverb = all(w.get("pos") == "RB" for w in ws)
        inten = sum(float(w.get("intensity")) for w in ws) / len(ws) if adverb else 1.0
        out[form] = (pol, subj, inten)
    return out


def supplement_entries(path):
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip() or line.startswith("#"):
                continue
            token, pol, subj, inten = line.rstrip("\n").split("\t")
            out[token] = (float(pol), float(subj), float(inten))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--xml", required=True)
    ap.add_argument("--supplement", default="data/lexicon/supplement.tsv")
    ap.add_argument("--out", default="data/lexicon/en_sentiment.tsv")
    args = ap.parse_args()

    entries = base_entries(args.xml)
    added = 0
    for token, values in supplement_entries(args.supplement).items():
        if token not in entries:
            entries[token] = values
            added += 1

    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write("# English sentiment lexicon: token, polarity, subjectivity, intensity.\n")
        f.write("# Base: pattern/TextBlob en-sentiment.xml (PDDL), senses averaged.\n")
        for token in sorted(entries):
            pol, subj, inten = entries[token]
            f.write(f"{token}\t{pol:.4f}\t{subj:.4f}\t{inten:.4f}\n")
    print(f"{len(entries)} entries ({added} from supplement) -> {args.out}")


if __name__ == "__main__":
    main()
