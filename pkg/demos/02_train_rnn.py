"""Training the vanilla RNN on row-sequential input.

The network is a single recurrent layer of tanh units with no bias inside
the recurrence; a linear layer reads the class logits off the final hidden
state. Training is plain mini-batch Adam on softmax cross-entropy, fully
deterministic given the seed.

With RNN_INTROSPECT_MNIST set this trains on real digits (a full study
run is `--epochs 30` via the CLI; here we keep it short). Without it, a
synthetic glyph task stands in.
"""

from common import load_splits, out_path

from rnn_introspect import svg, training

train_set, test_set, source = load_splits()
print(f"training on {source}: {len(train_set)} train / {len(test_set)} test examples")

config = training.TrainConfig(epochs=5, batch_size=64, lr=1e-3, seed=0)
result = training.train(
    config,
    train_set,
    eval_set=test_set,
    on_epoch=lambda m: print(
        f"  epoch {m.epoch}: loss={m.train_loss:.4f} "
        f"train_acc={m.train_acc:.4f} test_acc={m.test_acc:.4f}"
    ),
)

ckpt_path = out_path("demo_checkpoint.ckpt")
training.save_checkpoint(result.checkpoint, ckpt_path)
print(f"checkpoint -> {ckpt_path}")

# Checkpoints are versioned, checksummed, and resume bit-exactly: training
# 5 epochs straight equals training 3, reloading, then training 2 more.
reloaded = training.load_checkpoint(ckpt_path)
assert training.checkpoint_to_bytes(reloaded) == training.checkpoint_to_bytes(result.checkpoint)

final = training.evaluate(reloaded.params, test_set)
print(f"test accuracy {final.accuracy:.4f}")
print("confusion diagonal:", final.confusion.diagonal().tolist())

chart = svg.line_chart(
    [
        svg.Series("train", [m.epoch for m in result.metrics], [m.train_acc for m in result.metrics]),
        svg.Series("test", [m.epoch for m in result.metrics], [m.test_acc for m in result.metrics]),
    ],
    title=f"Accuracy per epoch ({source})",
    x_label="epoch",
    y_label="accuracy",
)
with open(out_path("demo_training.svg"), "w") as fh:
    fh.write(chart)
print(f"accuracy curve -> {out_path('demo_training.svg')}")
