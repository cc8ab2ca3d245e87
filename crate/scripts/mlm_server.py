#!/usr/bin/env python3
"""Masked-LM scoring server speaking line-delimited JSON on stdin/stdout.

Announces `{"ready": true, "mask_literal": ...}` on startup, then answers
each `{"id": n, "sentence": ..., "words": [...]}` request with
`{"id": n, "logits": [...]}`. A word the tokenizer cannot encode as a single
token gets `null` instead of a logit.

Requires `transformers` and `torch`:

    python3 scripts/mlm_server.py --model bert-large-uncased --device cpu
"""

import argparse
import json
import sys


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", required=True, help="model name or local path")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args()

    try:
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer
    except ImportError as exc:  # announce the failure before dying
        print(json.dumps({"ready": False, "error": f"missing dependency: {exc}"}), flush=True)
        return 1

    tokenizer = AutoTokenizer.from_pretrained(args.model)
    model = AutoModelForMaskedLM.from_pretrained(args.model)
    model.to(args.device)
    model.eval()

    mask_token = tokenizer.mask_token
    mask_id = tokenizer.mask_token_id
    print(json.dumps({"ready": True, "mask_literal": mask_token}), flush=True)

    def single_token_id(word: str):
        pieces = tokenizer.tokenize(word)
        if len(pieces) != 1:
            return None
        token_id = tokenizer.convert_tokens_to_ids(pieces[0])
        if token_id is None or token_id == tokenizer.unk_token_id:
            return None
        return token_id

    logits_cache = {}

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        request_id = request["id"]
        try:
            sentence = request["sentence"]
            if sentence in logits_cache:
                mask_logits = logits_cache[sentence]
            else:
                encoded = tokenizer(sentence, return_tensors="pt").to(args.device)
                positions = (encoded["input_ids"][0] == mask_id).nonzero(as_tuple=True)[0]
                if len(positions) != 1:
                    raise ValueError(
                        f"sentence must contain exactly one {mask_token}, found {len(positions)}"
                    )
                with torch.no_grad():
                    output = model(**encoded)
                mask_logits = output.logits[0, positions[0]].float().cpu()
                logits_cache[sentence] = mask_logits
            logits = []
            for word in request["words"]:
                token_id = single_token_id(word)
                logits.append(None if token_id is None else float(mask_logits[token_id]))
            print(json.dumps({"id": request_id, "logits": logits}), flush=True)
        except Exception as exc:  # report per request, keep serving
            print(json.dumps({"id": request_id, "error": str(exc)}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
