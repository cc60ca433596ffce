#!/usr/bin/env python3
"""Builds tiny random-weight checkpoints and reference outputs for the LM tests.

The reference values come from Hugging Face transformers/tokenizers, which the
C++ backends must reproduce: tokenizer ids, full logits for fixed id sequences,
and candidate log-probabilities under the masked and causal scoring protocols
(computed here independently of the C++ code path).

Run from the repository root:  python3 tests/fixtures/make_lm_fixtures.py
"""

import json
import os
import re

import torch
from tokenizers import ByteLevelBPETokenizer, BertWordPieceTokenizer
from transformers import (BertConfig, BertForMaskedLM, GPT2Config, GPT2LMHeadModel,
                          RobertaConfig, RobertaForMaskedLM)

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(os.path.dirname(HERE))
BANK = json.load(open(os.path.join(ROOT, "data", "itembank.json")))


def corpus():
    lines = []
    names = BANK["names"] + BANK.get("aliases", [])
    for s in BANK["sets"]:
        t = BANK["templates"][s["id"]]
        for p in s["pairs"]:
            for n in names:
                fill = lambda f, **kw: re.sub(r"\{(\w+)\}", lambda m: kw.get(m.group(1), "a"), f)
                lines.append(fill(t["fact"], entity=n, background=p["background"]) + ". " +
                             fill(t["query"], entity=n).replace("___", p["target"]))
                lines.append(fill(t["multi"]["b_type"], entity2=n, word=p["background"]))
                lines.append(fill(t["multi"]["t_type"], entity2=n, word=p["target"]))
                lines.append(fill(t["between_fact"], background=p["background"]))
    lines += BANK["fillers"]
    lines += ["knows that his friends", "and he himself", "Cafe 123 don't can't we'll", "  spaced   out  "]
    return lines


def randomize(model, std):
    torch.manual_seed(1234)
    with torch.no_grad():
        for p in model.parameters():
            p.normal_(0.0, std)
    model.eval()
    return model


def bpe_tokenizer(specials, vocab_size):
    tok = ByteLevelBPETokenizer()
    tok.train_from_iterator(corpus(), vocab_size=vocab_size, min_frequency=1,
                            special_tokens=specials, show_progress=False)
    return tok


TOKENIZE_CASES = [
    "Sebastian lives in France. The capital of Sebastian's country is",
    " Paris", "Paris", " Helsinki", "Helsinki", " Pyramid of Giza",
    "Jake works as an optician. For his job, Jake sells",
    "John lives in Chile, writes poetry, drives a car, and slept late last week.",
    "  spaced   out  ", "don't we'll it's", "Café 123!", "trailing ",
]

CONTEXTS = [
    ("Sebastian lives in France. The capital of Sebastian's country is ___",
     ["Paris", "Santiago", "Beijing", "Helsinki", "Jakarta", "Warsaw"]),
    ("Jake works as a florist, and is friends with an optician and a baker. For his job, Jake sells ___",
     ["flowers", "glasses", "bread", "meat", "fish", "paintings"]),
    ("Sebastian lives in France, and Rowan lives in Indonesia. The capital of Rowan's country is ___",
     ["Paris", "Santiago", "Beijing", "Helsinki", "Jakarta", "Warsaw"]),
    ("Jack played football. In his game, Jack scored a ___",
     ["touchdown", "run", "goal", "century"]),
]


def split_masked(context):
    blank = context.index("___")
    prefix = context[:blank].rstrip()
    suffix = context[blank + 3:]
    cut = prefix.rfind(". ")
    if cut < 0:
        return None, prefix, suffix
    return prefix[:cut + 1], prefix[cut + 2:], suffix


def log_softmax_rows(logits):
    return torch.log_softmax(logits.double(), dim=-1)


def causal_scores(model, tok, bos, context, candidates):
    prefix = context[:context.index("___")].rstrip()
    ids = [bos] + tok.encode(prefix).ids
    out = []
    for c in candidates:
        best = None
        for variant in (" " + c, c):
            cids = tok.encode(variant).ids
            full = torch.tensor([ids + cids])
            with torch.no_grad():
                lp = log_softmax_rows(model(full).logits[0])
            total = sum(lp[len(ids) - 1 + j, cids[j]].item() for j in range(len(cids)))
            if best is None or total > best[0]:
                best = (total, len(cids))
        out.append({"candidate": c, "log_prob": best[0], "n_subtokens": best[1]})
    return out


def masked_scores(model, kind, tok, special, context, candidates):
    seg_a, seg_b, suffix = split_masked(context)
    enc = lambda s: tok.encode(s, add_special_tokens=False).ids if kind == "bert" else tok.encode(s).ids
    out = []
    for c in candidates:
        variants = [c.lower()] if kind == "bert" else [" " + c, c]
        best = None
        for variant in variants:
            cids = enc(variant)
            k = len(cids)
            if kind == "bert":
                first = [special["cls"]] + enc(seg_a) + [special["sep"]]
                second = enc(seg_b) + [special["mask"]] * k + (enc(suffix) if suffix.strip() else []) + [special["sep"]]
                ids = first + second
                types = [0] * len(first) + [1] * len(second)
                mask_start = len(first) + len(enc(seg_b))
            else:
                first = [special["bos"]] + enc(seg_a) + [special["eos"], special["eos"]]
                second = enc(seg_b) + [special["mask"]] * k + (enc(suffix) if suffix.strip() else []) + [special["eos"]]
                ids = first + second
                types = [0] * len(ids)
                mask_start = len(first) + len(enc(seg_b))
            with torch.no_grad():
                logits = model(input_ids=torch.tensor([ids]),
                               token_type_ids=torch.tensor([types])).logits[0]
            lp = log_softmax_rows(logits)
            total = sum(lp[mask_start + j, cids[j]].item() for j in range(k))
            if best is None or total > best[0]:
                best = (total, k)
        out.append({"candidate": c, "log_prob": best[0], "n_subtokens": best[1]})
    return out


def logits_case(model, ids, types=None):
    with torch.no_grad():
        kwargs = {"input_ids": torch.tensor([ids])}
        if types is not None:
            kwargs["token_type_ids"] = torch.tensor([types])
        logits = model(**kwargs).logits[0]
    return {"ids": ids, "types": types, "rows": logits.shape[0], "cols": logits.shape[1],
            "logits": [round(float(x), 7) for x in logits.flatten().tolist()]}


def write_config(model, path, extra=None):
    cfg = model.config.to_dict()
    if extra:
        cfg.update(extra)
    json.dump(cfg, open(os.path.join(path, "config.json"), "w"), indent=2, sort_keys=True)


def main():
    expected = {}

    # GPT-2
    gdir = os.path.join(HERE, "tiny-gpt2")
    os.makedirs(gdir, exist_ok=True)
    gtok = bpe_tokenizer(["<|endoftext|>"], 700)
    gtok.save_model(gdir)
    eot = gtok.token_to_id("<|endoftext|>")
    gcfg = GPT2Config(vocab_size=gtok.get_vocab_size(), n_positions=128, n_embd=32, n_layer=2,
                      n_head=4, bos_token_id=eot, eos_token_id=eot)
    gpt2 = randomize(GPT2LMHeadModel(gcfg), 0.2)
    gpt2.save_pretrained(gdir, safe_serialization=True)
    ids = [eot] + gtok.encode(CONTEXTS[0][0][:-4]).ids
    expected["gpt2"] = {
        "tokenize": [{"text": s, "ids": gtok.encode(s).ids} for s in TOKENIZE_CASES],
        "logits": logits_case(gpt2, ids),
        "scores": [{"context": c, "scores": causal_scores(gpt2, gtok, eot, c, cands)}
                   for c, cands in CONTEXTS],
    }

    # Same GPT-2 stored as float16.
    hdir = os.path.join(HERE, "tiny-gpt2-f16")
    os.makedirs(hdir, exist_ok=True)
    gtok.save_model(hdir)
    half = GPT2LMHeadModel(gcfg)
    half.load_state_dict(gpt2.state_dict())
    half = half.half()
    half.save_pretrained(hdir, safe_serialization=True)
    expected["gpt2_f16"] = {"logits": logits_case(half.float().eval(), ids)}

    # BERT (uncased WordPiece)
    bdir = os.path.join(HERE, "tiny-bert")
    os.makedirs(bdir, exist_ok=True)
    btok = BertWordPieceTokenizer(lowercase=True)
    btok.train_from_iterator(corpus(), vocab_size=500, min_frequency=1, show_progress=False)
    btok.save_model(bdir)
    json.dump({"do_lower_case": True}, open(os.path.join(bdir, "tokenizer_config.json"), "w"))
    special = {"cls": btok.token_to_id("[CLS]"), "sep": btok.token_to_id("[SEP]"),
               "mask": btok.token_to_id("[MASK]")}
    bcfg = BertConfig(vocab_size=btok.get_vocab_size(), hidden_size=32, num_hidden_layers=2,
                      num_attention_heads=4, intermediate_size=64, max_position_embeddings=128,
                      type_vocab_size=2, pad_token_id=btok.token_to_id("[PAD]"))
    bert = randomize(BertForMaskedLM(bcfg), 0.2)
    bert.save_pretrained(bdir, safe_serialization=True)
    first = [special["cls"]] + btok.encode("Sebastian lives in France.", add_special_tokens=False).ids + [special["sep"]]
    second = btok.encode("The capital of Sebastian's country is", add_special_tokens=False).ids + [special["mask"], special["sep"]]
    expected["bert"] = {
        "tokenize": [{"text": s, "ids": btok.encode(s, add_special_tokens=False).ids}
                     for s in TOKENIZE_CASES],
        "logits": logits_case(bert, first + second, [0] * len(first) + [1] * len(second)),
        "scores": [{"context": c, "scores": masked_scores(bert, "bert", btok, special, c, cands)}
                   for c, cands in CONTEXTS],
    }

    # RoBERTa (byte-level BPE)
    rdir = os.path.join(HERE, "tiny-roberta")
    os.makedirs(rdir, exist_ok=True)
    rtok = bpe_tokenizer(["<s>", "<pad>", "</s>", "<unk>", "<mask>"], 700)
    rtok.save_model(rdir)
    rspecial = {"bos": rtok.token_to_id("<s>"), "eos": rtok.token_to_id("</s>"),
                "mask": rtok.token_to_id("<mask>")}
    rcfg = RobertaConfig(vocab_size=rtok.get_vocab_size(), hidden_size=32, num_hidden_layers=2,
                         num_attention_heads=4, intermediate_size=64, max_position_embeddings=130,
                         type_vocab_size=1, pad_token_id=rtok.token_to_id("<pad>"),
                         bos_token_id=rspecial["bos"], eos_token_id=rspecial["eos"])
    roberta = randomize(RobertaForMaskedLM(rcfg), 0.2)
    roberta.save_pretrained(rdir, safe_serialization=True)
    rids = ([rspecial["bos"]] + rtok.encode("Sebastian lives in France.").ids +
            [rspecial["eos"], rspecial["eos"]] +
            rtok.encode("The capital of Sebastian's country is").ids + [rspecial["mask"], rspecial["eos"]])
    expected["roberta"] = {
        "tokenize": [{"text": s, "ids": rtok.encode(s).ids} for s in TOKENIZE_CASES],
        "logits": logits_case(roberta, rids, [0] * len(rids)),
        "scores": [{"context": c, "scores": masked_scores(roberta, "roberta", rtok, rspecial, c, cands)}
                   for c, cands in CONTEXTS],
    }

    for d in (gdir, hdir, bdir, rdir):
        for junk in ("generation_config.json",):
            p = os.path.join(d, junk)
            if os.path.exists(p):
                os.remove(p)

    with open(os.path.join(HERE, "lm_expected.json"), "w") as f:
        json.dump(expected, f, indent=1)


if __name__ == "__main__":
    main()
