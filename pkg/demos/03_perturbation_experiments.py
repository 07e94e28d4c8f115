"""The three input-perturbation experiments.

1. blank_tail - show the first rows, feed zeros for the rest; the network
   still runs its full 28 steps.
2. truncate   - show the first rows and stop there, reading the class off
   the hidden state early.
3. pad_blank  - show the whole image, then keep feeding blank rows.

Comparing 1 and 2 isolates what the recurrent dynamics contribute after
the informative rows stop; 3 shows how fragile the readout is to running
past the trained sequence length.
"""

from common import load_splits, out_path

from rnn_introspect import perturb, svg, training

train_set, test_set, source = load_splits()
config = training.TrainConfig(epochs=5, batch_size=64, lr=1e-3, seed=0)
params = training.train(config, train_set).checkpoint.params
print(f"trained on {source}; baseline accuracy "
      f"{training.evaluate(params, test_set).accuracy:.4f}")

# Experiments 1 and 2 share an x-axis: how many real rows the network saw.
blank = perturb.accuracy_sweep(params, test_set, perturb.Kind.BLANK_TAIL, list(range(1, 28)))
trunc = perturb.accuracy_sweep(params, test_set, perturb.Kind.TRUNCATE, list(range(1, 28)))
print("shown  blank-tail  truncated")
for shown in (4, 9, 14, 19, 24):
    b = next(p for p in blank.points if p.shown_rows == shown)
    t = next(p for p in trunc.points if p.shown_rows == shown)
    print(f"{shown:5d}  {b.accuracy:.4f}      {t.accuracy:.4f}")

chart = svg.line_chart(
    [
        svg.Series("blank tail", [p.shown_rows for p in blank.points],
                   [p.accuracy for p in blank.points]),
        svg.Series("truncated", [p.shown_rows for p in trunc.points],
                   [p.accuracy for p in trunc.points]),
    ],
    title=f"Accuracy vs rows shown ({source})",
    x_label="image rows shown",
    y_label="test accuracy",
)
with open(out_path("demo_exp12.svg"), "w") as fh:
    fh.write(chart)

# Experiment 3: append blank rows after the full image. The hidden state
# keeps evolving under h -> tanh(w_rec h) with no input.
pad = perturb.accuracy_sweep(params, test_set, perturb.Kind.PAD_BLANK, list(range(0, 201)))
with open(out_path("demo_exp3_curve.csv"), "w") as fh:
    fh.write(perturb.curve_to_csv(pad))
chart = svg.line_chart(
    [svg.Series("padded", [p.amount for p in pad.points], [p.accuracy for p in pad.points])],
    title=f"Accuracy vs appended blank rows ({source})",
    x_label="blank rows appended",
    y_label="test accuracy",
)
with open(out_path("demo_exp3.svg"), "w") as fh:
    fh.write(chart)
print(f"k=0 accuracy {pad.points[0].accuracy:.4f}, "
      f"k=1 {pad.points[1].accuracy:.4f}, k=200 {pad.points[-1].accuracy:.4f}")
print(f"curves -> {out_path('demo_exp12.svg')}, {out_path('demo_exp3.svg')}")
