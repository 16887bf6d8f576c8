"""Explain one black-box prediction with a local unpruned tree.

Generates an imbalanced mixed-type dataset, trains the built-in random
forest as the black box, and explains a single test instance: the 100
nearest training rows (Gower distance) are relabeled by the forest,
SMOTE-NC balances the local classes, and the unpruned CART fit on that
set yields the IF-THEN rule for the instance.
"""

import numpy as np

from araucana import (
    BuiltinOracle,
    ExplainConfig,
    ForestConfig,
    SynthSpec,
    explain_instance,
    render_explanation,
    synth_dataset,
    train_forest,
)


def main():
    train = synth_dataset(SynthSpec("imbalanced_mixed", 1000), seed=0)
    print(f"training set: {len(train)} rows, "
          f"{int(train.y.sum())} minority ({train.y.mean():.0%})")

    black_box = BuiltinOracle(train_forest(train, ForestConfig(seed=1)))

    # a fresh instance the model has never seen
    query = synth_dataset(SynthSpec("imbalanced_mixed", 1), seed=999).X[0]
    cfg = ExplainConfig(seed=0)  # N=100, Gower, SMOTE-NC balance, unpruned CART
    explanation = explain_instance(train, query, black_box, cfg)

    print()
    print(render_explanation(explanation, "text").decode())
    print("query:", np.round(query, 3))
    print("the tree reproduces the black box here:", explanation.faithful)


if __name__ == "__main__":
    main()
