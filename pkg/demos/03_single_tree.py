# Grow a tensor-input tree on piecewise-constant data, inspect its
# structure, and prune it back with the complexity measure.

import numpy as np

from tensortree import (
    GrowConfig,
    LeafModelSpec,
    PruneConfig,
    SplitCriterion,
    SyntheticSpec,
    complexity,
    evaluate,
    generate,
    grow,
    prune,
)
from tensortree.tree import LeafNode

# The piecewise generator: three response levels (5, -1, -4) decided by
# two coordinates of a (4, 4, 4) input tensor, plus Gaussian noise.
x, y = generate(SyntheticSpec("prune_fn", n=500, seed=1))
x_test, y_test = generate(SyntheticSpec("prune_fn", n=500, seed=2))

cfg = GrowConfig(
    max_depth=4,
    min_samples_leaf=5,
    criterion=SplitCriterion(kind="sse"),
    leaf=LeafModelSpec(kind="mean"),
)
tree = grow(x, y, cfg)
print("grown: depth", tree.depth(), "leaves", tree.n_leaves)
print("root rule:", tree.root.rule)  # splits near 0.4 on coordinate (0, 1, 0)


def show(node, indent="  "):
    if isinstance(node, LeafNode):
        print(f"{indent}leaf n={node.n} mean={node.model.mean:.2f}")
    else:
        c = node.rule.coords
        print(f"{indent}if x[{c}] <= {node.rule.threshold:.3f}:")
        show(node.left, indent + "  ")
        print(f"{indent}else:")
        show(node.right, indent + "  ")


show(tree.root)

# Complexity-based pruning: larger alpha buys simpler trees.
for alpha in (0.01, 0.1, 0.5):
    pruned = prune(tree, PruneConfig(alpha=alpha, quality="variance"))
    m = evaluate(y_test, pruned.predict(x_test))
    print(f"alpha={alpha}: leaves={pruned.n_leaves} "
          f"complexity={complexity(pruned, PruneConfig(alpha=alpha)):.2f} "
          f"test mse={m.mse:.3f}")
