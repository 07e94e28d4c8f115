"""Measuring the geometry of hidden representations.

Three views of the same trained network:
  - PCA explained-variance dimensionality (dim90) per timestep: how many
    linear directions the states actually occupy as the input unfolds,
  - an exact t-SNE embedding of the states at chosen timesteps, colored by
    the true class,
  - k-NN purity: the fraction of each state's nearest neighbors sharing
    its label, a scalar proxy for how separated the classes already are.
"""

import numpy as np
from common import load_splits, out_path

from rnn_introspect import embedding, geometry, svg, training

train_set, test_set, source = load_splits()
config = training.TrainConfig(epochs=5, batch_size=64, lr=1e-3, seed=0)
params = training.train(config, train_set).checkpoint.params

sample = geometry.stratified_subsample(test_set, min(600, len(test_set)), seed=0)
print(f"analyzing {len(sample)} {source} examples")

# dim90 across all 28 timesteps, global and per class
curve = geometry.dimensionality_curve(params, sample)
dims = [entry.overall.dim90 for entry in curve]
print("global dim90 per timestep:")
print("  " + " ".join(f"{d:3d}" for d in dims))
peak = int(np.argmax(dims))
print(f"peak dimensionality {dims[peak]} at timestep {peak + 1}")

chart = svg.line_chart(
    [svg.Series("all classes", [e.timestep for e in curve], dims, color="#000000")],
    title=f"Linear dimensionality of hidden states ({source})",
    x_label="timestep",
    y_label="components for 90% variance",
)
with open(out_path("demo_dim_curve.svg"), "w") as fh:
    fh.write(chart)

# capture states at early / mid / final steps for t-SNE and purity
steps = [4, 14, 28]
states = geometry.capture_states(params, sample, steps)
for t in steps:
    purities = {k: geometry.knn_purity(states[t].states, states[t].labels, k) for k in (5, 10, 20)}
    shown = " ".join(f"k={k}: {v:.3f}" for k, v in purities.items())
    print(f"t={t:2d} purity {shown}")

for t in steps:
    result = embedding.tsne(states[t], perplexity=20.0, iterations=500, seed=0)
    chart = svg.scatter_chart(
        result.points, result.labels,
        title=f"t-SNE of hidden states at t={t} ({source}, KL={result.kl_divergence:.3f})",
    )
    with open(out_path(f"demo_tsne_t{t}.svg"), "w") as fh:
        fh.write(chart)
print("scatters -> " + ", ".join(out_path(f"demo_tsne_t{t}.svg") for t in steps))
