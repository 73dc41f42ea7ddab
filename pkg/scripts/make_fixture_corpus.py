#!/usr/bin/env python3
"""Regenerate the example corpus under fixtures/corpus/.

Produces the raw source files (with planted duplicates, too-short rows,
label variants, and one conflicting gold), one instruction pool per
dataset, and a scripted predictions file aligned with the seed-42 test
splits. Everything is deterministic; rerunning must be a no-op unless
the pipeline's split algorithm changed, in which case the predictions
file moves with it.

Usage: python3 scripts/make_fixture_corpus.py
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from instructmill import rng
from instructmill.corpus import ingest_dataset, load_manifest
from instructmill.instructgen import build_pool, save_pool
from instructmill.preprocess import (
    DEFAULT_RATIOS,
    LabelMap,
    deduplicate,
    derive_dev_from_train,
    filter_short,
    load_label_map,
    stratified_split,
    unify_labels,
)

CORPUS = ROOT / "fixtures" / "corpus"
SEED = 42

AR_TOPICS = ["المطعم الجديد", "الفندق", "المتجر الإلكتروني", "شركة الاتصالات",
             "المقهى", "التطبيق", "المستشفى", "خدمة التوصيل", "المعرض",
             "الصالة الرياضية", "المكتبة", "محطة الوقود"]
EN_TOPICS = ["blender", "headphones", "laptop stand", "coffee maker",
             "desk chair", "backpack", "monitor", "keyboard", "water bottle",
             "phone case", "router", "vacuum"]
HI_TOPICS = ["मोबाइल", "जूता", "कैमरा", "मिक्सर", "पंखा", "हीटर", "बैग",
             "घड़ी", "स्पीकर", "प्रेशर कुकर", "टीवी", "फ्रिज"]

SENTIMENT_BASES = {
    "arabic": {
        "positive": [
            "الخدمة كانت ممتازة في {t}",
            "تجربة رائعة مع {t} وأنصح بها الجميع",
            "أسعار {t} مناسبة والجودة عالية",
            "فريق {t} محترف والتعامل راق جدا",
            "أفضل ما جربت هذا العام هو {t}",
            "جودة {t} فاقت توقعاتي بكثير",
        ],
        "negative": [
            "الخدمة سيئة للغاية في {t}",
            "تجربة محبطة مع {t} ولن أكررها",
            "أسعار {t} مبالغ فيها والجودة ضعيفة",
            "تأخير مستمر وإهمال واضح من {t}",
            "أسوأ تعامل واجهته كان مع {t}",
        ],
        "neutral": [
            "زرت {t} اليوم ولم ألاحظ شيئا مميزا",
            "خدمة {t} عادية مثل غيرها",
            "لا رأي واضح لدي حول {t}",
            "تجربتي مع {t} كانت متوسطة",
        ],
    },
    "english": {
        "positive": [
            "The {t} exceeded all my expectations",
            "Absolutely loved the {t}, five stars from me",
            "Great value, and the {t} arrived a day early",
            "The {t} still works flawlessly after two months of daily use",
            "Support for the {t} was quick and genuinely friendly",
            "Best {t} I have owned so far",
        ],
        "negative": [
            "The {t} broke within a week",
            "Terrible experience with the {t}, requesting a refund",
            "The {t} looks nothing like the photos",
            "Setup for the {t} took hours and it still fails",
            "Worst {t} I have ever bought",
        ],
        "neutral": [
            "The {t} is fine but nothing special",
            "The {t} does the job, no more and no less",
            "Average {t} for an average price",
            "The {t} arrived on time and works as described",
        ],
    },
    "hindi": {
        "positive": [
            "यह {t} बहुत बढ़िया है और पैसा वसूल है",
            "{t} की गुणवत्ता ने मेरा दिल जीत लिया",
            "मुझे यह {t} बेहद पसंद आया",
            "{t} समय पर पहुंचा और शानदार निकला",
            "इतना अच्छा {t} पहले कभी नहीं देखा",
        ],
        "negative": [
            "यह {t} बिल्कुल बेकार निकला",
            "{t} एक हफ्ते में ही खराब हो गया",
            "मुझे इस {t} से बहुत निराशा हुई",
            "{t} की सेवा बहुत खराब है",
        ],
        "neutral": [
            "यह {t} ठीक ठाक है, कुछ खास नहीं",
            "{t} औसत दर्जे का है",
            "इस {t} के बारे में मेरी कोई खास राय नहीं",
        ],
    },
}

CLAIM_BASES = {
    "arabic": {
        "checkworthy": [
            "أعلنت الوزارة أن معدل التضخم بلغ {n} في المئة هذا الشهر",
            "تشير الإحصاءات إلى أن عدد السكان تجاوز {n} مليون نسمة",
            "قال الوزير إن الميزانية ارتفعت بنسبة {n} في المئة",
            "أكد التقرير أن نسبة البطالة انخفضت إلى {n} في المئة",
            "ذكرت الصحيفة أن المشروع كلف {n} مليون دينار",
        ],
        "not-checkworthy": [
            "أعتقد أن الطقس اليوم جميل جدا رقم {n}",
            "ما أجمل هذه المدينة في الصباح رقم {n}",
            "أتمنى لكم جميعا يوما سعيدا رقم {n}",
            "القهوة صباحا أفضل شيء في الحياة رقم {n}",
            "متى سيبدأ الموسم الجديد من المسلسل رقم {n}",
        ],
    },
    "english": {
        "checkworthy": [
            "The city council approved a budget of {n} million dollars last night",
            "Unemployment in the region fell to {n} percent according to the bureau",
            "The new bridge will carry {n} thousand vehicles per day",
            "The district built {n} new schools over the past decade",
            "Exports grew by {n} percent in the last quarter",
        ],
        "not-checkworthy": [
            "I think the mayor gave a wonderful speech, take {n}",
            "What a beautiful morning here at the town hall, take {n}",
            "We should all be kinder to our neighbours, take {n}",
            "Honestly the debate felt endless to me, take {n}",
            "Is anyone else excited about the fair this weekend, take {n}",
        ],
    },
    "hindi": {
        "checkworthy": [
            "सरकार ने बताया कि इस साल {n} किलोमीटर सड़क बनी",
            "रिपोर्ट के अनुसार बेरोजगारी दर {n} प्रतिशत हो गई है",
            "मंत्री ने कहा कि बजट में {n} करोड़ रुपये का प्रावधान है",
            "जनगणना के अनुसार शहर की आबादी {n} लाख है",
            "अधिकारी ने कहा कि {n} नए अस्पताल खोले गए",
        ],
        "not-checkworthy": [
            "मुझे लगता है कि आज मौसम बहुत सुहाना है, बार {n}",
            "काश हर दिन रविवार होता, बार {n}",
            "यह शहर सुबह के समय कितना सुंदर लगता है, बार {n}",
            "क्या आपने नई फिल्म देखी, बार {n}",
        ],
    },
}


def sentiment_rows(language: str, n: int, gen) -> list[tuple[str, str]]:
    topics = {"arabic": AR_TOPICS, "english": EN_TOPICS, "hindi": HI_TOPICS}[language]
    bases = SENTIMENT_BASES[language]
    # Skewed on purpose so stratification has unequal strata.
    schedule = ["positive"] * 9 + ["negative"] * 7 + ["neutral"] * 4
    rows = []
    seen = set()
    i = 0
    while len(rows) < n:
        label = schedule[i % len(schedule)]
        base = bases[label][i % len(bases[label])]
        topic = topics[(i * 7 + gen.randrange(3)) % len(topics)]
        text = base.format(t=topic)
        i += 1
        if text in seen:
            continue
        seen.add(text)
        rows.append((text, label))
    return rows


def claim_rows(language: str, n: int, gen) -> list[tuple[str, str]]:
    bases = CLAIM_BASES[language]
    schedule = ["checkworthy"] * 11 + ["not-checkworthy"] * 9
    rows = []
    seen = set()
    i = 0
    while len(rows) < n:
        label = schedule[i % len(schedule)]
        base = bases[label][i % len(bases[label])]
        text = base.format(n=3 + ((i * 13 + gen.randrange(5)) % 94))
        i += 1
        if text in seen:
            continue
        seen.add(text)
        rows.append((text, label))
    return rows


def vary_case(label: str, index: int) -> str:
    if index % 11 == 3:
        return label.upper()
    if index % 11 == 7:
        return label.capitalize()
    return label


def write_csv(path: Path, header: tuple[str, str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_tsv(path: Path, header: tuple[str, str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(header)
        writer.writerows(rows)


def write_jsonl(path: Path, text_field: str, label_field: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for text, label in rows:
            fh.write(json.dumps({text_field: text, label_field: label},
                                ensure_ascii=False) + "\n")


def make_data_files() -> None:
    data = CORPUS / "data"

    gen = rng.stream(SEED, "fixture", "ar_sentiment")
    rows = sentiment_rows("arabic", 112, gen)
    rows = [(t, vary_case(l, i)) for i, (t, l) in enumerate(rows)]
    rows.insert(20, rows[4])                       # exact duplicate
    rows.insert(45, rows[9])                       # exact duplicate
    rows.insert(60, (rows[15][0], "neutral"))      # same text, new label
    rows.append(("لا", "negative"))                # 2 letters, filtered
    rows.append(("٩٩", "neutral"))                 # digits only, filtered
    rows.append(("", "positive"))                  # empty text, ingest drop
    rows.append(("نص بلا تصنيف واضح هنا", ""))      # empty label, ingest drop
    rows.append(("الفرع الجديد ممتاز لكن الانتظار طويل", "positive,negative"))
    write_csv(data / "ar_sentiment.csv", ("text", "sentiment"), rows)

    gen = rng.stream(SEED, "fixture", "ar_checkworthy")
    rows = claim_rows("arabic", 106, gen)
    surfaced = []
    for i, (text, label) in enumerate(rows):
        if label == "checkworthy" and i % 9 == 2:
            label = ["check-worthy", "Check_Worthy", "Worth Checking"][i % 3]
        elif label == "not-checkworthy" and i % 9 == 5:
            label = ["not check-worthy", "NOT_CHECKWORTHY", "Unworthy"][i % 3]
        else:
            label = vary_case(label, i)
        surfaced.append((text, label))
    surfaced.insert(30, surfaced[11])
    surfaced.insert(70, surfaced[25])
    surfaced.append(("هل", "not-checkworthy"))     # 2 letters, filtered
    write_tsv(data / "ar_checkworthy.tsv", ("statement", "class"), surfaced)

    gen = rng.stream(SEED, "fixture", "en_sentiment")
    rows = sentiment_rows("english", 108, gen)
    rows = [(t, vary_case(l, i)) for i, (t, l) in enumerate(rows)]
    train, test = rows[:83], rows[83:]
    train.insert(40, train[7])                     # duplicate inside train
    train.append(("ok", "neutral"))                # 2 letters, filtered
    test.append(train[3])                          # leak: dedup drops it from test
    write_jsonl(data / "en_sentiment.train.jsonl", "text", "label", train)
    write_jsonl(data / "en_sentiment.test.jsonl", "text", "label", test)

    gen = rng.stream(SEED, "fixture", "en_checkworthy")
    rows = claim_rows("english", 103, gen)
    rows = [(t, vary_case(l, i)) for i, (t, l) in enumerate(rows)]
    rows.insert(18, rows[2])
    rows.insert(77, rows[33])
    rows.append(("no", "not-checkworthy"))         # 2 letters, filtered
    rows.append(("42", "checkworthy"))             # digits only, filtered
    write_csv(data / "en_checkworthy.csv", ("text", "label"), rows)

    gen = rng.stream(SEED, "fixture", "hi_sentiment")
    rows = sentiment_rows("hindi", 108, gen)
    rows = [(t, vary_case(l, i)) for i, (t, l) in enumerate(rows)]
    rows.insert(22, rows[6])
    rows.insert(64, rows[31])
    rows.append(("ठीक", "neutral"))                # 2 letters + matra, filtered
    write_jsonl(data / "hi_sentiment.jsonl", "text", "label", rows)

    gen = rng.stream(SEED, "fixture", "hi_checkworthy")
    rows = claim_rows("hindi", 98, gen)
    rows = [(t, vary_case(l, i)) for i, (t, l) in enumerate(rows)]
    rows.insert(12, rows[3])
    rows.append(("हा", "not-checkworthy"))         # 2 letters, filtered
    write_csv(data / "hi_checkworthy.csv", ("text", "label"), rows)


SENTIMENT_INSTRUCTIONS_A = [
    "Classify the sentiment of the given text as positive, negative, or neutral.",
    "Read the text and decide whether its tone is positive, negative, or neutral.",
    "Determine whether the following review expresses a positive, negative, or neutral opinion.",
    "Label the text below with exactly one of: positive, negative, neutral.",
    "Identify the overall sentiment conveyed by the text.",
    "Judge the writer's attitude in the text as positive, negative, or neutral.",
    "Assign a sentiment category to the provided text.",
    "Decide which sentiment class best fits the following passage.",
    "Evaluate the emotional polarity of the text.",
    "Given the review, state its sentiment.",
]
SENTIMENT_INSTRUCTIONS_B = [
    "Analyze the text and report its sentiment as positive, negative, or neutral.",
    "Is the opinion below positive, negative, or neutral? Answer with the label.",
    "Categorize the sentiment expressed in this post.",
    "Tell me whether this review sounds positive, negative, or neutral.",
    "Pick the sentiment label that matches the text.",
    "From the choices positive, negative, and neutral, select the one describing the text.",
    "Rate the stance of the author toward the subject as positive, negative, or neutral.",
    "What sentiment does the following text carry?",
    "Examine the passage and output its sentiment class.",
    "State the polarity of the given opinion.",
]
CLAIM_INSTRUCTIONS_A = [
    "Decide whether the statement contains a factual claim worth fact-checking.",
    "Classify the text as checkworthy or not-checkworthy.",
    "Does this sentence make a verifiable claim? Answer checkworthy or not-checkworthy.",
    "Judge if the statement should be sent to fact-checkers.",
    "Label the statement as checkworthy when it asserts a checkable fact.",
    "Determine whether the claim in the text merits verification.",
    "Is the following statement a factual assertion or mere opinion? Use the labels checkworthy and not-checkworthy.",
    "Assess whether this text makes a claim that can be verified.",
    "Mark the statement as checkworthy or not-checkworthy.",
    "Evaluate whether the sentence carries a checkable factual claim.",
]
CLAIM_INSTRUCTIONS_B = [
    "Identify whether the given statement deserves fact-checking.",
    "Tell me if this text states a verifiable fact: checkworthy or not-checkworthy.",
    "Screen the statement and flag it as checkworthy when it needs verification.",
    "Would a fact-checker need to verify this statement? Respond with the label.",
    "Categorize the sentence as checkworthy or not-checkworthy.",
    "Review the claim and decide if it is worth verifying.",
    "Does the text assert something checkable? Label it accordingly.",
    "Separate factual claims from opinions: label this one.",
    "Check whether the statement presents a fact that can be confirmed.",
    "Output checkworthy if the statement makes a verifiable claim, otherwise not-checkworthy.",
]


def make_pools(manifest) -> None:
    pools_dir = CORPUS / "pools"
    for meta in manifest.datasets:
        if meta.task == "Sentiment":
            a, b = SENTIMENT_INSTRUCTIONS_A, SENTIMENT_INSTRUCTIONS_B
        else:
            a, b = CLAIM_INSTRUCTIONS_A, CLAIM_INSTRUCTIONS_B
        pool = build_pool(meta, [("scripted-a", a), ("scripted-b", b)])
        save_pool(pool, pools_dir / f"{meta.id}.json")


CORRECT_TEMPLATES = [
    "{label}",
    "The label is: {label}.",
    "Answer: {label}",
    "I would classify this as {label}.",
    "Label = {label}",
    "{upper}",
    "This one is clearly {label}!",
    "After reading carefully, the text is {label}.",
]
REFUSALS = [
    "I cannot provide a label",
    "Sorry, I am unable to decide here.",
    "As a language model I would need more context.",
    "The text does not give me enough to go on.",
]
CODE_SWITCH = {"p": "پ", "n": "ن", "s": "س", "f": "ف", "ch": "چ"}


def code_switch(label: str) -> str:
    if label.startswith("ch"):
        return CODE_SWITCH["ch"] + label[2:]
    head = label[0]
    if head in CODE_SWITCH:
        return CODE_SWITCH[head] + label[1:]
    return label


def test_split_for(meta):
    extra = None
    if meta.label_map_path is not None:
        extra = load_label_map(meta.label_map_path, meta.label_space).surface_forms
    records, _ = ingest_dataset(meta, extra)
    records, _ = deduplicate(records)
    label_map = (
        load_label_map(meta.label_map_path, meta.label_space)
        if meta.label_map_path is not None
        else LabelMap.identity(meta.label_space)
    )
    records = unify_labels(records, label_map)
    records, _ = filter_short(records, 3)
    if meta.presplit:
        return [r for r in records if r.split == "test"]
    _, test, _ = stratified_split(records, DEFAULT_RATIOS, SEED)
    return test


def make_predictions(manifest) -> None:
    lines = [json.dumps({"header": {
        "model": "scripted-mock",
        "temperature": 0,
        "top_p": 0.95,
        "note": "templated outputs for exercising the scoring path",
    }})]
    for meta in manifest.datasets:
        for record in test_split_for(meta):
            gen = rng.stream(SEED, meta.id, "mockpred", record.ordinal)
            roll = gen.randrange(100)
            gold = record.target[0]
            if roll < 72:
                template = CORRECT_TEMPLATES[gen.randrange(len(CORRECT_TEMPLATES))]
                text = template.format(label=gold, upper=gold.upper())
            elif roll < 78:
                if meta.language == "arabic":
                    text = code_switch(gold)
                else:
                    template = CORRECT_TEMPLATES[gen.randrange(len(CORRECT_TEMPLATES))]
                    text = template.format(label=gold, upper=gold.upper())
            elif roll < 92:
                others = [l for l in meta.label_space if l != gold]
                wrong = others[gen.randrange(len(others))]
                template = CORRECT_TEMPLATES[gen.randrange(len(CORRECT_TEMPLATES))]
                text = template.format(label=wrong, upper=wrong.upper())
            else:
                text = REFUSALS[gen.randrange(len(REFUSALS))]
            lines.append(json.dumps(
                {"record_id": record.record_id, "text": text},
                ensure_ascii=False,
            ))
    (CORPUS / "predictions.jsonl").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )


def main() -> None:
    make_data_files()
    manifest = load_manifest(CORPUS / "manifest.yaml")
    make_pools(manifest)
    make_predictions(manifest)
    total = 0
    for meta in manifest.datasets:
        for source in meta.files.values():
            with open(source.path, encoding="utf-8") as fh:
                rows = sum(1 for _ in fh)
            if source.format in ("csv", "tsv"):
                rows -= 1
            total += rows
    print(f"fixture corpus written: {total} source rows across "
          f"{len(manifest.datasets)} datasets")


if __name__ == "__main__":
    main()
