"""The whole study through the command-line interface.

`rnn-introspect reproduce-paper` chains training, the three perturbation
experiments and the geometry analysis, writing every figure's data as CSV
plus self-contained SVG plots, with a checksummed manifest per stage.

On the real digits that is:

    rnn-introspect reproduce-paper \
        --train-images data/mnist/train-images-idx3-ubyte \
        --train-labels data/mnist/train-labels-idx1-ubyte \
        --test-images  data/mnist/t10k-images-idx3-ubyte \
        --test-labels  data/mnist/t10k-labels-idx1-ubyte \
        --out-dir runs/paper --seed 0

(30 epochs: roughly 6 minutes of training on two cores plus a few
minutes of t-SNE per embedded timestep.)
This demo performs the same chain on a small synthetic dataset with
reduced settings so it finishes in under a minute.
"""

import json
import os

from common import OUT_DIR, load_splits, synthetic_split

from rnn_introspect import cli, idx

data_dir = os.path.join(OUT_DIR, "full_study_data")
os.makedirs(data_dir, exist_ok=True)

_, _, source = load_splits()
if source == "MNIST":
    root = os.environ["RNN_INTROSPECT_MNIST"]
    paths = idx.mnist_paths(root)
    overrides = []
else:
    # write a synthetic train/test pair in IDX format
    paths = {}
    for split, n, seed in (("train", 1500, 5), ("t10k", 600, 6)):
        dataset = synthetic_split(n, seed)
        pixels = (dataset.sequences * 255).astype("uint8")
        images = idx.ImageSet(count=n, rows=28, cols=28, pixels=pixels)
        labels = idx.LabelSet(count=n, labels=dataset.labels.astype("uint8"))
        img_path = os.path.join(data_dir, f"{split}-images-idx3-ubyte")
        lbl_path = os.path.join(data_dir, f"{split}-labels-idx1-ubyte")
        with open(img_path, "wb") as fh:
            fh.write(idx.images_to_idx_bytes(images))
        with open(lbl_path, "wb") as fh:
            fh.write(idx.labels_to_idx_bytes(labels))
        key = "train" if split == "train" else "test"
        paths[f"{key}_images"] = img_path
        paths[f"{key}_labels"] = lbl_path
    overrides = [
        "--epochs", "4", "--subsample", "300",
        "--perplexity", "12", "--tsne-iterations", "300",
    ]

out = os.path.join(OUT_DIR, "full_study")
code = cli.main([
    "reproduce-paper",
    "--train-images", paths["train_images"], "--train-labels", paths["train_labels"],
    "--test-images", paths["test_images"], "--test-labels", paths["test_labels"],
    "--out-dir", out, "--seed", "0", *overrides,
])
assert code == 0, f"exit code {code}"

with open(os.path.join(out, "manifest.json")) as fh:
    manifest = json.load(fh)
print(f"\n{source} study complete: {len(manifest['outputs'])} artifacts")
for name in sorted(manifest["outputs"]):
    print(f"  {name}")
