"""Stdio serve loop and the real transformers-backed generation function."""

from __future__ import annotations

import argparse
import sys
from typing import IO

from .core import AdapterConfig, GenerateFn, respond


def serve(config: AdapterConfig, generate: GenerateFn,
          stdin: IO[str] = sys.stdin, stdout: IO[str] = sys.stdout) -> None:
    """Answer protocol requests line by line until stdin closes.

    Requests are processed sequentially; any internal batching belongs to
    the generation function and is invisible on the wire.
    """
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(respond(line, generate, config) + "\n")
        stdout.flush()


def load_generator(config: AdapterConfig) -> GenerateFn:
    """Load the checkpoint and wrap beam-search generation.

    Expects a seq2seq checkpoint whose decoded outputs follow the
    `<entity name> >> <language>` convention.
    """
    import torch
    from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(config.model)
    model = AutoModelForSeq2SeqLM.from_pretrained(config.model).to(config.device)
    model.eval()

    def generate(text: str, k: int) -> list[tuple[str, float]]:
        inputs = tokenizer(text, return_tensors="pt", truncation=True).to(config.device)
        with torch.no_grad():
            out = model.generate(
                **inputs,
                num_beams=max(k, config.beam_width),
                num_return_sequences=k,
                output_scores=True,
                return_dict_in_generate=True,
                early_stopping=True,
            )
        texts = tokenizer.batch_decode(out.sequences, skip_special_tokens=True)
        scores = out.sequences_scores.tolist() if out.sequences_scores is not None else [0.0] * len(texts)
        ranked = sorted(zip(texts, scores), key=lambda pair: -pair[1])
        return list(ranked)

    return generate


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Serve generator protocol v1 on stdio.")
    parser.add_argument("--model", required=True, help="checkpoint path or hub identifier")
    parser.add_argument("--beam", type=int, default=10, help="beam width (default 10)")
    parser.add_argument("--device", default="cpu", help="torch device hint (default cpu)")
    parser.add_argument("--start-marker", default="[START]")
    parser.add_argument("--end-marker", default="[END]")
    args = parser.parse_args(argv)

    config = AdapterConfig(
        model=args.model,
        beam_width=args.beam,
        device=args.device,
        start_marker=args.start_marker,
        end_marker=args.end_marker,
    )
    try:
        generate = load_generator(config)
    except Exception as exc:
        print(f"failed to load model {config.model!r}: {exc}", file=sys.stderr)
        return 1
    serve(config, generate)
    return 0


if __name__ == "__main__":
    sys.exit(main())
