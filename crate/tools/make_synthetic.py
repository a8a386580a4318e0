#!/usr/bin/env python3
"""Generate the bundled 30-example synthetic corpus.

The sentence is a deterministic function of the graph: subject-verb-object
templates, optionally with one adjective on the object. Regenerate with:

    python3 tools/make_synthetic.py > data/synthetic30.amr
"""

SUBJECTS = ["dog", "cat", "bird", "man", "woman", "boy"]
VERBS = [("chase-01", "chases"), ("see-01", "sees"), ("like-01", "likes"),
         ("find-01", "finds"), ("hold-01", "holds")]
OBJECTS = ["ball", "book", "apple", "fish", "stone"]
ADJECTIVES = ["red", "big", "small"]


def main():
    blocks = []
    for i in range(30):
        subj = SUBJECTS[i % 6]
        verb, verb_s = VERBS[i % 5]
        obj = OBJECTS[(i + 2) % 5]
        if i < 15:
            graph = f"(v / {verb} :ARG0 (s / {subj}) :ARG1 (o / {obj}))"
            sent = f"the {subj} {verb_s} the {obj}"
        else:
            adj = ADJECTIVES[i % 3]
            graph = (f"(v / {verb} :ARG0 (s / {subj}) "
                     f":ARG1 (o / {obj} :mod (m / {adj})))")
            sent = f"the {subj} {verb_s} the {adj} {obj}"
        blocks.append(f"# ::id syn-{i + 1}\n# ::snt {sent}\n{graph}\n")
    print("\n".join(blocks), end="")


if __name__ == "__main__":
    main()
