#!/usr/bin/env python3
"""Writes data/toy_math_50.jsonl: 50 small arithmetic word problems with worked solutions."""
import json
import random
import sys

rng = random.Random(7)


def rows_of_trees():
    r, t, d = rng.randint(4, 15), rng.randint(6, 20), rng.randint(2, 9)
    total = r * t - d
    q = (f"An orchard has {r} rows with {t} apple trees in each row. A storm knocks down {d} trees. "
         f"How many trees are still standing?")
    s = (f"First we count the trees before the storm. There are {r} rows and each row holds {t} trees, "
         f"so the orchard starts with {r} times {t}, which is {r * t} trees. The storm knocks down {d} of them. "
         f"Subtracting the fallen trees from the starting count gives {r * t} minus {d}, which equals {total}. "
         f"Every remaining tree is still standing, so that is the count we want. "
         f"The final answer is \\boxed{{{total}}}.")
    return q, s, str(total)


def shop():
    p, n, paid = rng.randint(3, 12), rng.randint(2, 9), 0
    cost = p * n
    paid = (cost // 10 + 1) * 10 + rng.choice([0, 10, 20])
    change = paid - cost
    q = (f"Maria buys {n} notebooks that cost {p} dollars each and pays with {paid} dollars. "
         f"How much change does she receive?")
    s = (f"We need the total cost of the notebooks first. Each notebook costs {p} dollars and she buys {n} of them, "
         f"so the total is {n} times {p}, which is {cost} dollars. She hands the cashier {paid} dollars. "
         f"The change is the amount paid minus the total cost, so we compute {paid} minus {cost}. "
         f"That leaves {change} dollars returned to her. The final answer is \\boxed{{{change}}}.")
    return q, s, str(change)


def train():
    v, h = rng.randint(40, 120), rng.randint(2, 7)
    extra = rng.randint(10, 60)
    dist = v * h + extra
    q = (f"A train travels at {v} kilometers per hour for {h} hours and then covers another {extra} kilometers. "
         f"How many kilometers does it travel in total?")
    s = (f"Distance at a steady speed is speed multiplied by time. For the first part the train moves at {v} "
         f"kilometers per hour for {h} hours, which gives {v} times {h}, or {v * h} kilometers. "
         f"After that it covers another {extra} kilometers. Adding the two parts together we get {v * h} plus "
         f"{extra}, which is {dist} kilometers in total. The final answer is \\boxed{{{dist}}}.")
    return q, s, str(dist)


def share():
    k = rng.randint(3, 9)
    each = rng.randint(4, 25)
    left = rng.randint(0, k - 1)
    total = k * each + left
    q = (f"There are {total} marbles shared equally among {k} children, and any marbles that cannot be shared "
         f"equally are kept aside. How many marbles does each child get?")
    s = (f"Sharing equally means dividing the marbles by the number of children and keeping the whole part. "
         f"We divide {total} by {k}. Since {k} times {each} is {k * each}, and {k} times {each + 1} is "
         f"{k * (each + 1)}, which is more than {total}, each child receives {each} marbles. "
         f"The remaining {left} marbles are kept aside and do not change the share. "
         f"The final answer is \\boxed{{{each}}}.")
    return q, s, str(each)


def fraction():
    den = rng.choice([2, 3, 4, 5, 6, 8])
    num = rng.randint(1, den - 1)
    whole = den * rng.randint(3, 12)
    part = whole * num // den
    q = (f"A tank holds {whole} liters of water. Exactly {num}/{den} of the water is used to fill buckets. "
         f"How many liters are used?")
    s = (f"To find a fraction of a quantity we multiply the quantity by the fraction. The tank holds {whole} "
         f"liters, and we want {num}/{den} of that amount. Dividing {whole} by {den} gives {whole // den} liters "
         f"for each equal part. Taking {num} of those parts means multiplying {whole // den} by {num}, which gives "
         f"{part} liters. So {part} liters of water are used for the buckets. "
         f"The final answer is \\boxed{{{part}}}.")
    return q, s, str(part)


def main(path):
    makers = [rows_of_trees, shop, train, share, fraction]
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for i in range(50):
            q, s, truth = makers[i % len(makers)]()
            rec = {"id": f"toy-{i:03d}", "prompt": q, "demonstration": s, "ground_truth": truth,
                   "meta": {"source": "toy", "kind": makers[i % len(makers)].__name__}}
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/toy_math_50.jsonl")
