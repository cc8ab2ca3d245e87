#!/usr/bin/env python3
"""Secondary MLM training over a masked-sentence dataset.

Reads the JSON manifest written by the `finetune` driver, trains the base
model with the MLM objective on the dataset's masked positions only, logs the
loss per step, and saves the tuned model under the manifest's output_dir.

Requires `transformers` and `torch`:

    python3 scripts/finetune_mlm.py --manifest out/manifest.json
"""

import argparse
import json
import pathlib
import random
import sys

MASK_MARKER = "MASK"


def load_examples(path):
    examples = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                examples.append(json.loads(line))
    if not examples:
        raise SystemExit(f"dataset {path} is empty")
    return examples


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", required=True)
    args = parser.parse_args()

    manifest = json.loads(pathlib.Path(args.manifest).read_text())
    base = manifest["base_model"]
    if base["backend"] != "pretrained":
        raise SystemExit("only pretrained base models can be fine-tuned")

    import torch
    from torch.utils.data import DataLoader
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    seed = int(manifest.get("seed", 42))
    random.seed(seed)
    torch.manual_seed(seed)

    device = base.get("device") or "cpu"
    tokenizer = AutoTokenizer.from_pretrained(base["identifier"])
    model = AutoModelForMaskedLM.from_pretrained(base["identifier"])
    model.to(device)
    model.train()

    examples = load_examples(manifest["dataset"])
    max_len = int(manifest["max_sequence_length"])

    def encode(example):
        text = example["text"].replace(MASK_MARKER, tokenizer.mask_token, 1)
        encoded = tokenizer(
            text,
            truncation=True,
            max_length=max_len,
            padding="max_length",
            return_tensors="pt",
        )
        input_ids = encoded["input_ids"][0]
        labels = torch.full_like(input_ids, -100)
        target = tokenizer(
            " " + example["masked_word"], add_special_tokens=False
        )["input_ids"]
        if not target:
            target = tokenizer(example["masked_word"], add_special_tokens=False)["input_ids"]
        mask_positions = (input_ids == tokenizer.mask_token_id).nonzero(as_tuple=True)[0]
        if len(mask_positions) == 1 and len(target) >= 1:
            labels[mask_positions[0]] = target[0]
        return {
            "input_ids": input_ids,
            "attention_mask": encoded["attention_mask"][0],
            "labels": labels,
        }

    encoded = [encode(e) for e in examples]
    loader = DataLoader(
        encoded,
        batch_size=int(manifest["batch_size"]),
        shuffle=True,
        generator=torch.Generator().manual_seed(seed),
    )

    if manifest["optimizer"].lower() != "adam":
        raise SystemExit(f"unsupported optimizer {manifest['optimizer']}")
    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=float(manifest["learning_rate"]),
        weight_decay=float(manifest.get("weight_decay", 0.0)),
    )

    step = 0
    for epoch in range(int(manifest["epochs"])):
        for batch in loader:
            batch = {k: v.to(device) for k, v in batch.items()}
            output = model(**batch)
            output.loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            step += 1
            print(f"epoch {epoch + 1} step {step} loss {output.loss.item():.4f}", flush=True)

    out_dir = pathlib.Path(manifest["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    print(f"saved tuned model to {out_dir}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
