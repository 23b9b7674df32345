#!/usr/bin/env python3
"""Regenerates tests/data/synthetic_500.ndjson.

Deterministic: same seed, same bytes. The corpus packs several family shapes
(a wide quantization fan, a 40-leaf star, deep finetune chains, merges,
adapters, external parents) plus singleton filler, with cards, languages,
licenses, tasks, and doc flags distributed so every analysis command has
something to chew on.
"""

import json
import random
from datetime import datetime, timedelta
from pathlib import Path

SEED = 20240514
OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "synthetic_500.ndjson"

LICENSES = ["apache-2.0", "mit", "llama2", "llama3", "gemma", "cc-by-4.0",
            "cc-by-nc-4.0", "openrail", "creativeml-openrail-m", "gpl-3.0",
            "unknown", "other"]
TASKS = ["text-generation", "text-classification", "fill-mask", "translation",
         "text-to-image", "automatic-speech-recognition", "image-classification",
         "feature-extraction", "token-classification", "summarization"]
LIBRARIES = ["transformers", "peft", "diffusers", "gguf", "sentence-transformers",
             "timm", "keras"]
LANGS = ["en", "fr", "de", "zh", "ja", "es", "ru", "ko", "pt", "it", "hi", "ar"]
ARXIV = ["2401.00001", "2401.00002", "2402.11111", "2403.05530", "2405.04324",
         "2406.06525", "2407.10671", "2310.06825", "2307.09288", "2302.13971",
         "1810.04805", "1910.01108"]

WORDS = ("model training data fine tuned weights transformer layers tokens "
         "evaluation benchmark results usage license dataset language corpus "
         "inference quantized precision adapter merged checkpoint epoch base "
         "instruction chat reasoning alignment safety context attention head "
         "embedding vocabulary loss gradient batch sequence decoder encoder").split()

rng = random.Random(SEED)
records = []
epoch = datetime(2022, 3, 2)


def iso(dt):
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def prose(n_words, unicode_spice=False):
    ws = [rng.choice(WORDS) for _ in range(n_words)]
    if unicode_spice:
        ws.insert(rng.randrange(len(ws) + 1), "résumé")
        ws.insert(rng.randrange(len(ws) + 1), "模型")
    chunks, i = [], 0
    while i < len(ws):
        take = min(len(ws) - i, rng.randint(6, 14))
        chunks.append(" ".join(ws[i:i + take]).capitalize() + ".")
        i += take
    return " ".join(chunks)


def make_card(kind, base_words):
    body = prose(base_words, unicode_spice=rng.random() < 0.08)
    header = f"# Model card\n\n{body}"
    marker = ""
    if kind == "autogen-a":
        marker = "\n\nThis model card was automatically generated by the packaging pipeline."
    elif kind == "autogen-b":
        marker = "\n\nREADME generated automatically; edit before release."
    return header + marker


def record(mid, created, parents=(), license=None, languages=("en",), task=None,
           library=None, card=None, arxiv=(), extra_tags=(), downloads=None,
           likes=None, trending=None):
    tags = []
    if license:
        tags.append(f"license:{license}")
    tags.extend(languages)
    for kind, pid in parents:
        tags.append(f"base_model:{kind}:{pid}")
    for a in arxiv:
        tags.append(f"arxiv:{a}")
    tags.extend(extra_tags)
    if rng.random() < 0.40:
        tags.append("safetensors")
    if rng.random() < 0.06:
        tags.append("endpoints_compatible")
    if rng.random() < 0.24:
        tags.append("autotrain_compatible")
    if rng.random() < 0.30:
        tags.append("region:us")
    rng.shuffle(tags)
    rec = {
        "id": mid,
        "createdAt": iso(created),
        "downloads": downloads if downloads is not None else int(10 ** rng.uniform(0, 6)),
        "likes": likes if likes is not None else int(10 ** rng.uniform(0, 3.5)),
        "tags": tags,
    }
    if trending if trending is not None else rng.random() < 0.2:
        rec["trendingScore"] = round(rng.uniform(0, 60), 2)
    if task:
        rec["pipeline_tag"] = task
    if library:
        rec["library_name"] = library
    if card:
        rec["card"] = card
    records.append(rec)
    return mid


def child_date(parent_dt):
    return parent_dt + timedelta(days=rng.randint(20, 400),
                                 seconds=rng.randint(0, 86399))


def mutate_langs(langs):
    langs = list(langs)
    if rng.random() < 0.30 and len(langs) > 1:
        langs.pop(rng.randrange(len(langs)))
    if rng.random() < 0.35:
        extra = rng.choice(LANGS)
        if extra not in langs:
            langs.append(extra)
    return tuple(langs) if langs else ("en",)


def mutate_license(lic, chain):
    return rng.choice(chain) if rng.random() < 0.35 else lic


# --- family 1: wide quantization fan + deep finetune spine ------------------
g_root = record("bigco/granite-base", epoch, license="apache-2.0",
                languages=("en",), task="text-generation", library="transformers",
                card=make_card("plain", 600), arxiv=("2405.04324",),
                downloads=2_400_000, likes=3100)
g_date = datetime(2023, 1, 15)
fts = []
for i in range(5):
    d = g_date + timedelta(days=30 * i, seconds=7 * i)
    lic = ["apache-2.0", "apache-2.0", "mit", "apache-2.0", "cc-by-4.0"][i]
    card = make_card("autogen-a" if i == 4 else "plain", rng.randint(120, 400))
    fts.append(record(f"bigco/granite-ft-{i:02d}", d,
                      parents=[("finetune", g_root)], license=lic,
                      languages=mutate_langs(("en",)), task="text-generation",
                      library="transformers", card=card,
                      arxiv=("2405.04324",) if i < 2 else ()))
for i in range(13):
    d = g_date + timedelta(days=10 * i + 200, seconds=11 * i)
    author = "quantco" if i % 3 == 0 else "bigco"
    card = make_card("autogen-a", rng.randint(40, 120)) if rng.random() < 0.8 else None
    record(f"{author}/granite-q-{i:02d}", d, parents=[("quantized", g_root)],
           license="apache-2.0", languages=("en",), task="text-generation",
           library="gguf", card=card)

# spine to generation 5 under granite-ft-00, with forks for every pattern
spine = fts[0]
spine_date = datetime(2023, 8, 1)
for depth in range(4):
    nxt = record(f"bigco/granite-spine-{depth + 2}", child_date(spine_date),
                 parents=[("finetune", spine)],
                 license=mutate_license("apache-2.0", ["mit", "apache-2.0"]),
                 languages=mutate_langs(("en", "fr")), task="text-generation",
                 library="transformers",
                 card=make_card("plain", max(40, 300 - 60 * depth)) if rng.random() < 0.75 else None)
    for s in range(3 if depth < 2 else 1):  # siblings make forks under the spine
        record(f"bigco/granite-branch-{depth + 2}{chr(97 + s)}", child_date(spine_date),
               parents=[("finetune", spine)], license="apache-2.0",
               languages=("en",), task="text-generation",
               card=make_card("autogen-b", rng.randint(30, 90)) if rng.random() < 0.3 else None)
    spine = nxt
    spine_date = child_date(spine_date)

# triple fork: six finetunes under granite-ft-01
for s in range(6):
    record(f"bigco/granite-seed-{s}", child_date(datetime(2023, 9, 1)),
           parents=[("finetune", fts[1])], license="apache-2.0",
           languages=mutate_langs(("en",)), task="text-generation",
           card=make_card("plain", rng.randint(50, 160)) if rng.random() < 0.6 else None)
# adapters under granite-ft-02
for s in range(4):
    record(f"loras/granite-adapter-{s}", child_date(datetime(2023, 10, 1)),
           parents=[("adapter", fts[2])], license="apache-2.0", languages=("en",),
           task="text-generation", library="peft",
           card=make_card("autogen-a", rng.randint(25, 70)) if rng.random() < 0.7 else None)

# --- family 2: 40-leaf star --------------------------------------------------
s_root = record("starco/hub-base", datetime(2022, 3, 2), license="mit",
                languages=("en", "zh"), task="fill-mask", library="transformers",
                card=make_card("plain", 450), arxiv=("1810.04805",),
                downloads=5_100_000, likes=4800)
for i in range(40):
    d = datetime(2022, 6, 1) + timedelta(days=9 * i, seconds=13 * i)
    record(f"starco/star-{i:02d}", d, parents=[("finetune", s_root)],
           license=mutate_license("mit", ["mit", "apache-2.0", "cc-by-nc-4.0"]),
           languages=mutate_langs(("en", "zh")),
           task=rng.choice(["fill-mask", "text-classification"]),
           library="transformers",
           card=make_card("plain", rng.randint(30, 200)) if rng.random() < 0.6 else None)

# --- family 3: license / language drift chains ------------------------------
b_root = record("research/bert-mini", datetime(2022, 3, 2), license="llama2",
                languages=("en",), task="text-classification", library="transformers",
                card=make_card("plain", 520), arxiv=("2307.09288", "1910.01108"),
                downloads=910_000)
chain_licenses = ["llama2", "llama3", "apache-2.0", "mit"]
prev_level = [b_root]
b_date = datetime(2023, 2, 1)
for level in range(3):
    nxt_level = []
    for j, parent in enumerate(prev_level):
        for c in range(2 if level < 2 else 1):
            lic = chain_licenses[min(level + (1 if rng.random() < 0.7 else 0),
                                     len(chain_licenses) - 1)]
            langs = ("en",) if level == 0 else (("en", "zh") if level == 1 else ("zh",))
            nxt_level.append(record(
                f"research/bert-l{level + 1}-{j}{c}", child_date(b_date),
                parents=[("finetune", parent)], license=lic, languages=langs,
                task="text-classification", library="transformers",
                card=make_card("plain", rng.randint(60, 240)) if rng.random() < 0.7 else None))
    prev_level = nxt_level
    b_date = child_date(b_date)

# --- family 4: image models, openrail drift ---------------------------------
i_root = record("stability/gen-img", datetime(2022, 8, 10), license="openrail",
                languages=("en",), task="text-to-image", library="diffusers",
                card=make_card("plain", 380), arxiv=("2302.13971",))
prev = i_root
for i in range(6):
    lic = "creativeml-openrail-m" if i >= 2 else "openrail"
    prev = record(f"stability/gen-img-v{i + 2}", child_date(datetime(2022, 10, 1)),
                  parents=[("finetune", prev)], license=lic, languages=("en",),
                  task="text-to-image", library="diffusers",
                  card=make_card("plain", rng.randint(80, 300)) if rng.random() < 0.7 else None)
for i in range(5):
    record(f"community/img-remix-{i}", child_date(datetime(2023, 3, 1)),
           parents=[("merge", i_root), ("merge", f"stability/gen-img-v{i % 4 + 2}")],
           license="creativeml-openrail-m", languages=("en",), task="text-to-image",
           library="diffusers",
           card=make_card("autogen-b", rng.randint(30, 90)) if rng.random() < 0.5 else None)

# --- external parents --------------------------------------------------------
for i in range(6):
    record(f"indie/port-{i}", child_date(datetime(2024, 1, 1)),
           parents=[("finetune", f"external/closed-base-{i % 2}")],
           license=rng.choice(["llama3", "gemma"]), languages=("en",),
           task="text-generation", library="transformers",
           card=make_card("plain", rng.randint(40, 150)) if rng.random() < 0.5 else None)

# --- singleton filler to exactly 500 -----------------------------------------
fill = 500 - len(records)
for i in range(fill):
    created = epoch if rng.random() < 0.08 else (
        datetime(2022, 3, 3) + timedelta(days=rng.randint(0, 1150),
                                         seconds=rng.randint(0, 86399)))
    lic = rng.choice(LICENSES) if rng.random() < 0.8 else None
    langs = tuple(rng.sample(LANGS, rng.randint(1, 3))) if rng.random() < 0.7 else ()
    card = None
    if rng.random() < 0.66:
        kind = "plain"
        if rng.random() < 0.05:
            kind = rng.choice(["autogen-a", "autogen-b"])
        card = make_card(kind, rng.randint(15, 700))
    record(f"solo{i % 7}/model-{i:03d}", created, license=lic, languages=langs,
           task=rng.choice(TASKS) if rng.random() < 0.75 else None,
           library=rng.choice(LIBRARIES) if rng.random() < 0.7 else None,
           card=card, arxiv=tuple(rng.sample(ARXIV, rng.randint(1, 2)))
           if rng.random() < 0.25 else ())

rng.shuffle(records)
OUT.parent.mkdir(parents=True, exist_ok=True)
with open(OUT, "w", encoding="utf-8") as f:
    for rec in records:
        f.write(json.dumps(rec, ensure_ascii=False) + "\n")
print(f"wrote {len(records)} records to {OUT}")
