"""Replay corpus for the three worked examples.

Builds reference stores, vector indexes engineered to reproduce the
recorded retrieval order, and a response transcript covering every model
call, so the full pipeline replays the examples without any backend.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from moqa.corpus import (
    Modality,
    QuestionRecord,
    Reference,
    ReferenceStore,
    Table,
    write_questions,
    write_references,
)
from moqa.gateway import (
    BackendKind,
    BackendSpec,
    ResponseCache,
    compute_fingerprint,
    hash_basis_vector,
)
from moqa.indexing import Metric, build_index, save_index
from moqa.pipeline import RunConfig
from moqa.prompts import default_templates

DIM = 64

BACKENDS = {
    "chatgpt": BackendSpec(
        "chatgpt", BackendKind.CHAT, "https://api.example.com/v1/chat", "gpt-3.5-turbo"
    ),
    "gpt4": BackendSpec(
        "gpt4", BackendKind.CHAT, "https://api.example.com/v1/chat", "gpt-4"
    ),
    "blip2": BackendSpec(
        "blip2", BackendKind.CHAT, "https://vqa.example.com/v1/chat", "blip2-flan-t5-xl"
    ),
    "ance": BackendSpec(
        "ance", BackendKind.EMBEDDING, "https://emb.example.com/v1/embed", "ance"
    ),
    "clip": BackendSpec(
        "clip", BackendKind.EMBEDDING, "https://emb.example.com/v1/embed", "clip-vit"
    ),
}

STAGES = {
    "vqa": "blip2",
    "textual_qa": "chatgpt",
    "table_qa": "chatgpt",
    "direct_qa": "chatgpt",
    "fusion": "gpt4",
    "reextract": "gpt4",
    "embed_text": "ance",
    "embed_table": "ance",
    "embed_image": "clip",
}


@dataclass
class Example:
    qid: str
    question: str
    gold_answers: tuple
    gold_modality: str
    text_snippets: list
    table_snippets: list
    image_answers: list
    text_answers: list
    table_answers: list
    direct_answer: str
    fused_raw: str
    reextracted: str
    final: str
    candidates: list


EXAMPLES = [
    Example(
        qid="ex1",
        question="What is the competition of Gtu trttarfelag with match against Rangers?",
        gold_answers=("uefa champion leagu",),
        gold_modality="table",
        text_snippets=[
            "Knattspyrnufélagið Ægir is an Icelandic sports club from "
            "the town of Þorlákshöfn, mainly known for its football "
            "team. The club has a football team playing in the fifth tier of "
            "Icelandic football.",
            "Torfnesvöllur, known as Olísvöllurinn for sponsorship "
            "reasons, is a football stadium in Ísafjörður, Iceland "
            "and the home of Vestri and Knattspyrnufélagið Hörður. "
            "It broke ground in 1963 ...",
            'Tvillingderbyt (, "The Twin Derby") is a football fixture in Stockholm, '
            "Sweden, between cross-town rivals AIK and Djurgårdens IF. Both "
            "clubs were founded in Stockholm in 1891, just three weeks ...",
            'The Asturian derby (, or "Derbi astur"), is the name given to any '
            "association football match contested between Sporting de Gijón and "
            "Real Oviedo, the two biggest clubs in Asturias. The rivalry ...",
            "Knattspyrnufélagið Hörður was founded on 27 May 1919 "
            "as a football club with Þórhallur Leósson being its first "
            "chairman. Its first official game was against Fótboltafélag "
            "Ísafjarðar on 17 June 1921. ...",
        ],
        table_snippets=[
            "European Cup / UEFA Champions League European Cup / UEFA Champions "
            "League European Cup / UEFA Champions League European Cup / UEFA "
            "Champions ...",
            "2005–06 UEFA Cup 1Q FC Nistru Otaci 1–2 1–3 2–5 "
            "2007–08 UEFA Champions League 1Q NK Dinamo Zagreb 1–1 "
            "1–3 (aet) 2–4 2008–09 UEFA Cup ...",
            "1970–71 UEFA Cup Winners' Cup 1 Partizani 3–2 2–1 "
            "5–3 2 Real Madrid 0–2 1–0 1–2 1971–72 "
            "European Cup 1 Benfica 1–3 0–4 1–7 1972–73 ...",
            "1963–64 European Cup Preliminary round Borussia Dortmund 2–4 "
            "1–3 3–7 1964–65 European Cup Preliminary round Reipas "
            "Lahti 3–0 1–2 4–2 ...",
            "1968–69 European Cup Winners' Cup First Round FC Barcelona 0–1 "
            "0–3 0–4 1971–72 UEFA Cup First Round Legia Warszawa "
            "1–3 0–0 1–3 1993–94 ...",
        ],
        image_answers=[
            "wuppertaler", "woman football", "league cup", "league cup", "league cup",
        ],
        text_answers=["Unknown."] * 5,
        table_answers=["Unknown."] * 5,
        direct_answer="europa leagu",
        fused_raw="europa leagu",
        reextracted="",
        final="europa leagu",
        candidates=["league cup", "europa leagu"],
    ),
    Example(
        qid="ex2",
        question="how many songs were written by john lennon and paul mccartney",
        gold_answers=("180",),
        gold_modality="text",
        text_snippets=[
            "Lennon McCartney was the songwriting partnership between English "
            "musicians John Lennon (9 October 1940 8 December 1980) and Paul "
            "McCartney ...",
            "Lennon McCartney was the songwriting partnership between English "
            "musicians John Lennon (9 October 1940 8 December 1980) and Paul "
            "McCartney ...",
            "Lennon McCartney was the songwriting partnership between English "
            "musicians John Lennon and Paul McCartney of the Beatles, the "
            "partnership published approximately 180 jointly credited songs ...",
            "Paul McCartney is an English musician who has recorded hundreds of "
            "songs over the course of his over 60-year career. As a member of the "
            "Beatles, he formed a songwriting partnership with bandmate John",
            "Unlike many songwriting partnerships that comprise separate lyricist "
            "and composer, such as Jerry Leiber and Mike Stoller, Rodgers and "
            "Hammerstein, ...",
        ],
        table_snippets=[
            "1 75px Dylan May 24, 1941 present Mixed-Up Confusion (1962), performed "
            "by himself 2 75px McCartney June 18, 1942 present Love Me Do/P.S. I "
            "Love You ...",
            "1974 McGear Mike McGear 1980 The Reluctant Dog Steve Holley 1981 "
            "Somewhere in England All Those Years Ago George Harrison 1982 Tug of "
            "War ...",
            "196? Words and Music by Paul Williams Big Seven Music Corp. 1970 "
            "Someday Man Reprise ...",
            "1 If You Be My Baby Peter Green/Clifford Adams Fleetwood Mac Mr. "
            "Wonderful (1968) 6:38 2 Long Grey Mare Peter Green Fleetwood Mac ...",
            "Disc 1 (23971): Disc 1 (23971): Disc 1 (23971): Disc 1 (23971): Disc 1 "
            "(23971): A. I Love You Truly Carrie Jacobs Bond April 18, 1945 John "
            "Scott Trotter and His Orchestra 2:56 B. Just, ...",
        ],
        image_answers=[
            "more than one hundred", "just like starting over",
            "the john lennon story", "imagine", "more than one hundred",
        ],
        text_answers=[
            "Approximately 180.", "Approximately 180.", "Approximately 180.",
            "Unknown.", "Unknown.",
        ],
        table_answers=[
            "Two songs were written.", "Unknown.", "Unknown.", "Unknown.", "Unknown.",
        ],
        direct_answer="Over 150",
        fused_raw="approxim 180 jointli credit song",
        reextracted="approxim 180",
        final="approxim 180",
        candidates=[
            "more than one hundred", "Approximately 180.",
            "Two songs were written.", "Over 150",
        ],
    ),
    Example(
        qid="ex3",
        question="What kind of coaster is shown in this photo collage of Copenhagen?",
        gold_answers=("roller",),
        gold_modality="image",
        text_snippets=[
            "The ride's station is located on the midway directly across from Top "
            "Thrill Dragster and was the first coaster to have inversions featuring "
            "a walkway underneath. The ride consists of ...",
            "Kong is a steel Suspended Looping Coaster, made by Vekoma, located at "
            "Six Flags Discovery Kingdom in Vallejo, California ...",
            "Diavlo is a steel roller coaster at Himeji Central Park in Japan which "
            "is a clone of Batman the Ride. It is one of the first ...",
            "The first inversion in roller coaster history was part of the "
            "Centrifugal Railway of Paris, France, built in 1848. It consisted of a "
            "43-foot (13-meter) sloping track ...",
            "Colossus is a steel roller coaster at Thorpe Park in Surrey, England, "
            "and the park's first major attraction. It was built by Swiss "
            "manufacturers Intamin and designed ...",
        ],
        table_snippets=[
            "Wolverine Wildcat Michigan's Adventure United States 1988 Raging Wolf "
            "Bobs Geauga Lake United States 1988 Timber Wolf Worlds of Fun United "
            "States 1989 Hercules Dorney Park United States 1989 ...",
            "The Bat 1987 Vekoma A Vekoma Boomerang roller coaster. It was the "
            "seventh roller coaster added to the park. The Bats train was "
            "originally from the parks Dragon Fire coaster. During the 2008 "
            "season ...",
            "1985 Congo Carousel Robert Tidman Classic gallopers ride, operated "
            "previously at Happy Hour Amusement Park, Colwyn Bay 1986 Jungle Swings "
            "A classic chair-o-plane ride 1986 Jungle Cat ...",
            "All Saints' Church Church of Denmark 1932 150px Drag Church Church of "
            "Denmark 1885 150px Hans Tausen's Church Church of Denmark 1924 150px "
            "Hdevang Church Church of Denmark 1885 150px ...",
            "Ny Ellebjerg F, A, E 16 November 2006 16 November 2006 transfer to "
            "K00f8ge radial Gl. K00f8ge Landevej 2014 8 January 2005 8 January 2005 "
            "Temporary terminus; ...",
        ],
        image_answers=[
            "roller coaster", "a roller coaster", "roller coaster",
            "a wooden coaster", "heart",
        ],
        text_answers=["Unknown."] * 5,
        table_answers=["Unknown."] * 5,
        direct_answer="Tivoli Gardens",
        fused_raw="the roller coaster ride shown",
        reextracted="roller",
        final="roller",
        candidates=["roller coaster", "Tivoli Gardens"],
    ),
]


def _axis(text: str) -> int:
    return hash_basis_vector(text, DIM).index(1.0)


def _image_uri(qid: str, rank: int) -> str:
    return f"img://{qid}/{rank}"


@dataclass
class AppendixFixture:
    root: Path
    config: RunConfig
    config_path: Path
    questions: list
    transcript_path: Path
    expected: dict


def build_appendix(root) -> AppendixFixture:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    templates = default_templates()

    questions = [
        QuestionRecord(
            qid=ex.qid,
            question=ex.question,
            gold_answers=ex.gold_answers,
            gold_modality=ex.gold_modality,
        )
        for ex in EXAMPLES
    ]
    questions_path = root / "questions.jsonl"
    write_questions(questions, questions_path)

    axes = [_axis(ex.question) for ex in EXAMPLES]
    assert len(set(axes)) == len(axes), "question axes must not collide"
    tilt_axis = next(i for i in range(DIM) if i not in axes)

    refs = {"text": [], "table": [], "image": []}
    vectors = {"text": [], "table": [], "image": []}
    ids = {"text": [], "table": [], "image": []}
    for ex, axis in zip(EXAMPLES, axes):
        for rank in range(1, 6):
            snippet = ex.text_snippets[rank - 1]
            ref_id = f"{ex.qid}-text-{rank}"
            refs["text"].append(Reference(ref_id, Modality.TEXT, text_body=snippet))
            vec = np.zeros(DIM, dtype=np.float32)
            vec[axis] = 1.0 - 0.05 * rank
            vectors["text"].append(vec)
            ids["text"].append(ref_id)

            snippet = ex.table_snippets[rank - 1]
            ref_id = f"{ex.qid}-table-{rank}"
            refs["table"].append(
                Reference(
                    ref_id, Modality.TABLE, table=Table(headers=(), rows=((snippet,),))
                )
            )
            vec = np.zeros(DIM, dtype=np.float32)
            vec[axis] = 1.0 - 0.05 * rank
            vectors["table"].append(vec)
            ids["table"].append(ref_id)

            ref_id = f"{ex.qid}-image-{rank}"
            refs["image"].append(
                Reference(ref_id, Modality.IMAGE, image_uri=_image_uri(ex.qid, rank))
            )
            vec = np.zeros(DIM, dtype=np.float32)
            vec[axis] = 1.0
            vec[tilt_axis] = 0.1 * rank
            vectors["image"].append(vec)
            ids["image"].append(ref_id)

    reference_paths = {}
    index_paths = {}
    for modality in ("text", "table", "image"):
        store = ReferenceStore(Modality(modality), refs[modality])
        path = root / f"{modality}.jsonl"
        write_references(store, path)
        reference_paths[modality] = str(path)
        metric = Metric.COSINE if modality == "image" else Metric.INNER_PRODUCT
        index = build_index(
            np.stack(vectors[modality]), ids[modality], metric, Modality(modality)
        )
        index_path = root / f"{modality}.moqi"
        save_index(index, index_path)
        index_paths[modality] = str(index_path)

    transcript_path = root / "transcript.jsonl"
    cache = ResponseCache(transcript_path)

    def record_chat(backend_id, prompt, response, image_uri=None):
        fingerprint = compute_fingerprint(
            BACKENDS[backend_id], "chat", prompt, image_uri
        )
        cache.put(fingerprint, response)

    for ex in EXAMPLES:
        query_vector = hash_basis_vector(ex.question, DIM)
        for embed_backend in ("ance", "clip"):
            cache.put(
                compute_fingerprint(BACKENDS[embed_backend], "embed", ex.question),
                query_vector,
            )
        for rank in range(1, 6):
            vqa_prompt = templates["VQA"].render({"Q": ex.question})
            record_chat(
                "blip2",
                vqa_prompt,
                ex.image_answers[rank - 1],
                image_uri=_image_uri(ex.qid, rank),
            )
            qa_prompt = templates["QA"].render(
                {"reference": ex.text_snippets[rank - 1], "Q": ex.question}
            )
            record_chat("chatgpt", qa_prompt, ex.text_answers[rank - 1])
            qa_prompt = templates["QA"].render(
                {"reference": ex.table_snippets[rank - 1], "Q": ex.question}
            )
            record_chat("chatgpt", qa_prompt, ex.table_answers[rank - 1])
        direct_prompt = templates["DirectQA"].render({"questions": ex.question})
        record_chat("chatgpt", direct_prompt, ex.direct_answer)
        fusion_prompt = templates["AnswerFusion"].render(
            {"Q": ex.question, "Candidates": ", ".join(ex.candidates)}
        )
        record_chat("gpt4", fusion_prompt, ex.fused_raw)
        if ex.reextracted:
            reextract_prompt = templates["ReExtract"].render(
                {"Q": ex.question, "final answer": ex.fused_raw}
            )
            record_chat("gpt4", reextract_prompt, ex.reextracted)

    out_dir = root / "out"
    config = RunConfig(
        backends=dict(BACKENDS),
        stages=dict(STAGES),
        questions_path=str(questions_path),
        reference_paths=reference_paths,
        index_paths=index_paths,
        k=5,
        profile="mmcoqa",
        cache_path=str(transcript_path),
        replay=True,
        output_dir=str(out_dir),
    )

    config_path = root / "config.yaml"
    config_data = {
        "backends": {
            backend_id: {
                "kind": spec.kind.value,
                "endpoint": spec.endpoint,
                "model": spec.model_name,
            }
            for backend_id, spec in BACKENDS.items()
        },
        "stages": dict(STAGES),
        "questions": "questions.jsonl",
        "references": {m: f"{m}.jsonl" for m in ("text", "table", "image")},
        "indexes": {m: f"{m}.moqi" for m in ("text", "table", "image")},
        "cache": "transcript.jsonl",
        "replay": True,
        "k": 5,
        "output_dir": "out",
    }
    config_path.write_text(yaml.safe_dump(config_data), encoding="utf-8")

    expected = {
        ex.qid: {
            "final": ex.final,
            "candidates": list(ex.candidates),
            "fused_raw": ex.fused_raw,
            "provenance": "fusion_reextracted" if ex.reextracted else "fusion",
            "gold_modality": ex.gold_modality,
        }
        for ex in EXAMPLES
    }
    return AppendixFixture(
        root=root,
        config=config,
        config_path=config_path,
        questions=questions,
        transcript_path=transcript_path,
        expected=expected,
    )
