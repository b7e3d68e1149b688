#!/usr/bin/env python3
"""Build the fixture prospectus corpus and its golden labels.

Five filings in authentic EDGAR idiom: two ASCII-era (dot-leader and wide-gap
TOCs) and three HTML-era (anchor TOCs and one anchor-free contents table).
Golden TOC entries and section byte spans are emitted from the document
assembly itself (every offset is recorded while the builder lays text down),
so the labels are independent of any parser. Run once; outputs are committed.

Usage: python scripts/build_fixture_corpus.py [--out fixtures]
"""
from __future__ import annotations

import argparse
import json
import random
import struct
import textwrap
import zlib
from pathlib import Path


class DocBuilder:
    """Accumulates document text while recording byte offsets (ASCII content only)."""

    def __init__(self):
        self.parts: list[str] = []
        self.pos = 0

    def add(self, text: str) -> int:
        if any(ord(c) > 127 for c in text):
            raise ValueError("fixture content must stay ASCII so offsets equal byte counts")
        start = self.pos
        self.parts.append(text)
        self.pos += len(text)
        return start

    def text(self) -> str:
        return "".join(self.parts)


# ---------------------------------------------------------------------------
# Body text
# ---------------------------------------------------------------------------

SENTENCES = [
    "The {co} was incorporated in {state} in {year} and maintains its principal executive offices in {city}.",
    "Our revenue for the fiscal year ended December 31 was approximately ${rev} million, compared to ${rev2} million in the prior year.",
    "We intend to use the net proceeds of this offering for working capital, capital expenditures and general corporate purposes.",
    "Competition in the {industry} industry is intense, and many of our competitors have substantially greater financial resources.",
    "Our operating results have fluctuated in the past and are expected to fluctuate in the future.",
    "The {co} depends on a limited number of suppliers for certain key components and services.",
    "We have experienced significant growth in recent periods, which has placed a strain on our managerial and operational resources.",
    "There can be no assurance that we will achieve or sustain profitability on a quarterly or annual basis.",
    "The market price of the common stock may be highly volatile following this offering.",
    "Purchasers of the common stock offered hereby will experience immediate and substantial dilution.",
    "Our business is subject to extensive regulation by federal, state and local authorities.",
    "As of the date of this prospectus, we employed {emp} persons on a full-time basis.",
    "The underwriters have advised the {co} that they propose to offer the shares to the public at the price set forth on the cover page.",
    "Certain legal matters in connection with the offering will be passed upon for the {co} by counsel named herein.",
    "The financial statements included in this prospectus have been audited by independent public accountants.",
    "Demand for our products is affected by general economic conditions and by conditions specific to the {industry} sector.",
    "We rely on a combination of patent, trademark and trade secret protection to establish our proprietary rights.",
    "Our quarterly results may vary significantly depending on the timing of customer orders and product shipments.",
]

ENDINGS = {
    "clean": "Prospective investors should carefully consider all of the information set forth in this prospectus.",
    "dangling": "Additional information regarding these arrangements is provided as described in",
    "continued": "The discussion of these factors is continued on next page",
}


def make_paragraph(rng: random.Random, ctx: dict, n: int) -> str:
    picks = rng.sample(SENTENCES, k=min(n, len(SENTENCES)))
    return " ".join(s.format(**ctx) for s in picks)


def section_body(rng: random.Random, ctx: dict, paragraphs: int, ending: str) -> list[str]:
    out = [make_paragraph(rng, ctx, rng.randint(3, 5)) for _ in range(paragraphs)]
    out.append(ENDINGS[ending])
    return out


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------


def make_gif(seed: int) -> bytes:
    palette = bytes([seed % 256, (seed * 7) % 256, (seed * 13) % 256, 255, 255, 255])
    return (
        b"GIF89a\x02\x00\x02\x00\x80\x00\x00"
        + palette
        + b"!\xf9\x04\x00\x00\x00\x00\x00"
        + b",\x00\x00\x00\x00\x02\x00\x02\x00\x00\x02\x03\x44\x14\x05\x00;"
    )


def make_png(seed: int) -> bytes:
    def chunk(kind: bytes, payload: bytes) -> bytes:
        raw = kind + payload
        return struct.pack(">I", len(payload)) + raw + struct.pack(">I", zlib.crc32(raw))

    header = struct.pack(">IIBBBBB", 1, 1, 8, 2, 0, 0, 0)
    pixel = bytes([0, seed % 256, (seed * 3) % 256, (seed * 11) % 256])
    idat = zlib.compress(pixel)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", header)
        + chunk(b"IDAT", idat)
        + chunk(b"IEND", b"")
    )


# ---------------------------------------------------------------------------
# ASCII filings
# ---------------------------------------------------------------------------


def build_ascii_filing(meta: dict, section_plan: list[dict], toc_style: str) -> tuple[str, dict]:
    rng = random.Random(meta["seed"])
    ctx = meta["ctx"]
    doc = DocBuilder()

    doc.add(f"<SEC-DOCUMENT>{meta['accession']}.txt : {meta['date'].replace('-', '')}\n")
    doc.add("<SEC-HEADER>\n")
    doc.add(f"COMPANY CONFORMED NAME: {meta['company']}\n")
    doc.add(f"CENTRAL INDEX KEY: {meta['cik']}\n")
    doc.add(f"STANDARD INDUSTRIAL CLASSIFICATION: {meta['sic']}\n")
    doc.add(f"FORM TYPE: {meta['form']}\n")
    doc.add(f"FILED AS OF DATE: {meta['date'].replace('-', '')}\n")
    doc.add("</SEC-HEADER>\n")
    doc.add("<DOCUMENT>\n")
    doc.add(f"<TYPE>{meta['form']}\n<SEQUENCE>1\n<TEXT>\n\n")

    doc.add(f"{meta['company'].center(70)}\n\n")
    doc.add(f"{'%s SHARES OF COMMON STOCK' % meta['shares']:^70}\n\n".rstrip(" "))
    cover = make_paragraph(rng, ctx, 4)
    doc.add(textwrap.fill(cover, width=70) + "\n\n")
    doc.add("THE SHARES OFFERED HEREBY INVOLVE A HIGH DEGREE OF RISK.\n")
    doc.add('SEE "RISK FACTORS" BEGINNING ON PAGE %d.\n\n' % section_plan[1]["page"])

    doc.add("<PAGE>\n")
    doc.add(f"{'TABLE OF CONTENTS':^70}\n\n")
    doc.add(f"{'Page':>70}\n")
    for plan in section_plan:
        title, page = plan["title"], plan["page"]
        if toc_style == "dots":
            dots = "." * max(2, 66 - len(title) - len(str(page)))
            doc.add(f"{title}{dots}{page:>4}\n")
        else:
            doc.add(f"{title}{' ' * max(3, 66 - len(title) - len(str(page)))}{page:>4}\n")
    doc.add("\n")

    golden_toc = []
    golden_sections = []
    offsets = []
    for plan in section_plan:
        doc.add("<PAGE>\n")
        heading = plan["title"]
        pad = max(0, (70 - len(heading)) // 2)
        doc.add(" " * pad)
        offset = doc.add(heading + "\n\n")
        offsets.append(offset)
        golden_toc.append(
            {"raw_title": plan["title"], "page_number": plan["page"], "anchor": None, "offset": offset}
        )
        for para in section_body(rng, ctx, plan["paragraphs"], plan["ending"]):
            doc.add(textwrap.fill(para, width=70) + "\n\n")

    doc.add("<PAGE>\n")
    terminator = doc.add(f"{'PART II':^70}\n".rstrip(" ") if False else " " * 31 + "PART II\n")
    doc.add(" " * 20 + "INFORMATION NOT REQUIRED IN PROSPECTUS\n\n")
    doc.add(textwrap.fill(make_paragraph(rng, ctx, 3), width=70) + "\n\n")
    doc.add("</TEXT>\n</DOCUMENT>\n</SEC-DOCUMENT>\n")

    for i, plan in enumerate(section_plan):
        start = offsets[i]
        end = offsets[i + 1] if i + 1 < len(offsets) else terminator
        golden_sections.append(
            {
                "raw_title": plan["title"],
                "canonical_label": plan["label"],
                "start": start,
                "end": end,
            }
        )
    golden = {
        "accession_number": meta["accession"],
        "format": "ascii",
        "confidence": "exact",
        "toc": golden_toc,
        "sections": golden_sections,
        "image_files": [],
        "image_tag_count": 0,
    }
    return doc.text(), golden


# ---------------------------------------------------------------------------
# HTML filings
# ---------------------------------------------------------------------------


def build_html_filing(
    meta: dict, section_plan: list[dict], images: list[dict], anchored: bool
) -> tuple[str, dict]:
    rng = random.Random(meta["seed"])
    ctx = meta["ctx"]
    doc = DocBuilder()

    doc.add("<html>\n<head>\n")
    doc.add(f"<title>{meta['company']} - Form {meta['form']}</title>\n")
    doc.add("</head>\n<body bgcolor=\"#ffffff\">\n")
    doc.add(f"<center><h1>{meta['company']}</h1></center>\n")
    doc.add(f"<center><b>{meta['shares']} Shares of Common Stock</b></center>\n")
    doc.add(f"<p align=\"justify\">{make_paragraph(rng, ctx, 4)}</p>\n")
    doc.add("<hr>\n")

    doc.add("<center><b>TABLE OF CONTENTS</b></center>\n")
    doc.add("<table width=\"100%\" cellpadding=\"2\">\n")
    doc.add("<tr><td><b>Section</b></td><td align=\"right\"><b>Page</b></td></tr>\n")
    for i, plan in enumerate(section_plan):
        title_html = plan.get("title_html", plan["title"])
        if anchored:
            doc.add(
                f"<tr><td><a href=\"#sec{i}\">{title_html}</a></td>"
                f"<td align=\"right\">{plan['page']}</td></tr>\n"
            )
        else:
            doc.add(
                f"<tr><td>{title_html}</td><td align=\"right\">{plan['page']}</td></tr>\n"
            )
    toc_table_end = doc.add("</table>\n")
    doc.add("<hr>\n")

    image_cursor = 0
    golden_toc = []
    golden_sections = []
    offsets = []
    for i, plan in enumerate(section_plan):
        title_html = plan.get("title_html", plan["title"])
        if anchored:
            offset = doc.add(f"<a name=\"sec{i}\"></a>")
            doc.add(f"\n<center><b><font size=\"3\">{title_html}</font></b></center>\n")
        else:
            doc.add("\n<center>")
            offset = doc.add(f"<b>{title_html}</b>") + len("<b>")
            doc.add("</center>\n")
        offsets.append(offset)
        golden_toc.append(
            {
                "raw_title": plan["title"],
                "page_number": plan["page"],
                "anchor": f"sec{i}" if anchored else None,
                "offset": offset,
            }
        )
        for para in section_body(rng, ctx, plan["paragraphs"], plan["ending"]):
            para_html = para.replace("'", "&#8217;") if rng.random() < 0.3 else para
            doc.add(f"<p align=\"justify\" style=\"margin-top: 6pt\">{para_html}</p>\n")
        for _ in range(plan.get("images", 0)):
            src = images[image_cursor]["src"]
            doc.add(f"<center><img src=\"{src}\" alt=\"graphic\"></center>\n")
            image_cursor += 1

    doc.add("<hr>\n<center><b>\n")
    terminator = doc.add("PART II - INFORMATION NOT REQUIRED IN PROSPECTUS\n")
    doc.add("</b></center>\n")
    doc.add(f"<p align=\"justify\">{make_paragraph(rng, ctx, 3)}</p>\n")
    doc.add("</body>\n</html>\n")

    for i, plan in enumerate(section_plan):
        start = offsets[i]
        end = offsets[i + 1] if i + 1 < len(offsets) else terminator
        golden_sections.append(
            {
                "raw_title": plan["title"],
                "canonical_label": plan["label"],
                "start": start,
                "end": end,
            }
        )

    unique_files = sorted({img["src"] for img in images[:image_cursor]})
    golden = {
        "accession_number": meta["accession"],
        "format": "html",
        "confidence": "exact",
        "toc": golden_toc,
        "sections": golden_sections,
        "image_files": unique_files,
        "image_tag_count": image_cursor,
    }
    return doc.text(), golden


# ---------------------------------------------------------------------------
# Corpus definition
# ---------------------------------------------------------------------------


def sections_common(pages: list[int], endings: dict[int, str] | None = None) -> list[dict]:
    titles = [
        ("PROSPECTUS SUMMARY", "Prospectus Summary", 4),
        ("RISK FACTORS", "Risk Factors", 6),
        ("USE OF PROCEEDS", "Use of Proceeds", 2),
        ("DIVIDEND POLICY", "Dividend Policy", 1),
        ("CAPITALIZATION", "Capitalization", 2),
        ("DILUTION", "Dilution", 2),
        (
            "MANAGEMENT'S DISCUSSION AND ANALYSIS OF FINANCIAL CONDITION AND RESULTS OF OPERATIONS",
            "Management's Discussion and Analysis",
            5,
        ),
        ("BUSINESS", "Business", 5),
        ("MANAGEMENT", "Management", 3),
        ("EXECUTIVE COMPENSATION", "Executive Compensation", 2),
        ("PRINCIPAL STOCKHOLDERS", "Principal Stockholders", 2),
        ("UNDERWRITING", "Underwriting", 2),
        ("LEGAL MATTERS", "Legal Matters", 1),
        ("EXPERTS", "Experts", 1),
    ]
    endings = endings or {}
    plan = []
    for i, ((title, label, paragraphs), page) in enumerate(zip(titles, pages)):
        plan.append(
            {
                "title": title,
                "label": label,
                "page": page,
                "paragraphs": paragraphs,
                "ending": endings.get(i, "clean"),
            }
        )
    return plan


def title_case(plan: list[dict]) -> list[dict]:
    def tc(title: str) -> str:
        small = {"and", "of", "the", "in", "on", "to", "a"}
        words = title.lower().split()
        return " ".join(w if w in small and i else w.capitalize() for i, w in enumerate(words))

    out = []
    for p in plan:
        q = dict(p)
        q["title"] = tc(p["title"])
        out.append(q)
    return out


def build_corpus(out_dir: Path) -> None:
    corpus_dir = out_dir / "corpus"
    golden_dir = out_dir / "golden"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    golden_dir.mkdir(parents=True, exist_ok=True)

    filings = []

    # 1. ASCII 1997, dot-leader TOC, mining issuer; glossary title has no canonical label.
    pages = [3, 7, 12, 13, 14, 16, 18, 24, 31, 34, 36, 38, 40, 41]
    plan = sections_common(pages)
    plan[-1]["paragraphs"] = 0  # Experts runs a single sentence: too-short flag, clean ending
    plan.insert(9, {
        "title": "GLOSSARY OF MINING TERMS",
        "label": None,
        "page": 33,
        "paragraphs": 1,
        "ending": "clean",
    })
    meta1 = {
        "company": "SIERRA COMSTOCK MINING CORPORATION",
        "cik": "0000831001",
        "accession": "0000912057-97-001234",
        "form": "S-1",
        "date": "1997-03-12",
        "sic": "1040",
        "shares": "2,500,000",
        "seed": 971,
        "ctx": {
            "co": "Company",
            "state": "Nevada",
            "year": "1989",
            "city": "Reno, Nevada",
            "rev": "18.2",
            "rev2": "11.7",
            "emp": "214",
            "industry": "precious metals mining",
        },
    }
    text1, golden1 = build_ascii_filing(meta1, plan, toc_style="dots")
    filings.append((meta1, text1, golden1, "0000912057-97-001234.txt", []))

    # 2. ASCII 1998, wide-gap TOC, Title Case headings, software issuer.
    pages2 = [3, 6, 11, 12, 13, 15, 17, 23, 29, 32, 34, 36, 38, 39]
    plan2 = title_case(sections_common(pages2, endings={5: "dangling"}))
    meta2 = {
        "company": "NORTHERN LIGHTS SOFTWARE, INC.",
        "cik": "0000923456",
        "accession": "0000912057-98-004567",
        "form": "S-1",
        "date": "1998-08-21",
        "sic": "7372",
        "shares": "3,000,000",
        "seed": 982,
        "ctx": {
            "co": "Company",
            "state": "Delaware",
            "year": "1993",
            "city": "Bellevue, Washington",
            "rev": "42.6",
            "rev2": "27.9",
            "emp": "388",
            "industry": "application software",
        },
    }
    text2, golden2 = build_ascii_filing(meta2, plan2, toc_style="spaces")
    filings.append((meta2, text2, golden2, "0000912057-98-004567.txt", []))

    # 3. HTML 2011, anchored 14-row contents table, pharma issuer, 3 img tags / 2 files.
    pages3 = [1, 8, 34, 35, 36, 38, 40, 55, 78, 84, 90, 95, 99, 100]
    plan3 = []
    for i, p in enumerate(sections_common(pages3, endings={13: "clean"})):
        q = dict(p)
        q["title"] = p["title"].title().replace("'S", "'s").replace(" And ", " and ").replace(" Of ", " of ")
        plan3.append(q)
    plan3[6]["title"] = "Management's Discussion and Analysis of Financial Condition and Results of Operations"
    plan3[-1]["paragraphs"] = 0
    plan3[7]["images"] = 2
    plan3[8]["images"] = 1
    images3 = [
        {"src": "g001.gif", "seed": 31},
        {"src": "g002.gif", "seed": 32},
        {"src": "g001.gif", "seed": 31},
    ]
    meta3 = {
        "company": "CLEARWATER BIOSCIENCES, INC.",
        "cik": "0001345678",
        "accession": "0001193125-11-123456",
        "form": "S-1",
        "date": "2011-05-17",
        "sic": "2834",
        "shares": "6,000,000",
        "seed": 2011,
        "ctx": {
            "co": "Company",
            "state": "Delaware",
            "year": "2004",
            "city": "Cambridge, Massachusetts",
            "rev": "3.4",
            "rev2": "1.1",
            "emp": "96",
            "industry": "biopharmaceutical",
        },
    }
    text3, golden3 = build_html_filing(meta3, plan3, images3, anchored=True)
    filings.append((meta3, text3, golden3, "prospectus.htm", images3))

    # 4. HTML 2019 F-1, anchored TOC, bank issuer, 4 unique images, Experts ends short.
    pages4 = [1, 12, 40, 41, 42, 44, 47, 60, 88, 95, 101, 106, 112, 113]
    plan4 = []
    for p in sections_common(pages4, endings={12: "continued"}):
        q = dict(p)
        q["title"] = p["title"].title().replace("'S", "'s").replace(" And ", " and ").replace(" Of ", " of ")
        plan4.append(q)
    plan4[6]["title"] = "Management's Discussion and Analysis of Financial Condition and Results of Operations"
    plan4[-1]["paragraphs"] = 0
    plan4[0]["images"] = 1
    plan4[7]["images"] = 2
    plan4[8]["images"] = 1
    images4 = [
        {"src": "chart_deposits.png", "seed": 41},
        {"src": "branchmap.gif", "seed": 42},
        {"src": "orgstructure.png", "seed": 43},
        {"src": "logo_prb.gif", "seed": 44},
    ]
    meta4 = {
        "company": "PACIFIC RIM BANCORP LTD.",
        "cik": "0001456789",
        "accession": "0001047469-19-005678",
        "form": "F-1",
        "date": "2019-09-30",
        "sic": "6022",
        "shares": "10,000,000",
        "seed": 2019,
        "ctx": {
            "co": "Bank",
            "state": "Singapore",
            "year": "1998",
            "city": "Singapore",
            "rev": "310.5",
            "rev2": "264.2",
            "emp": "2,450",
            "industry": "commercial banking",
        },
    }
    text4, golden4 = build_html_filing(meta4, plan4, images4, anchored=True)
    filings.append((meta4, text4, golden4, "pacificrim-f1.htm", images4))

    # 5. HTML 2021 S-1/A, contents table WITHOUT anchors (text-run resolution path).
    pages5 = [1, 9, 28, 29, 30, 32, 35, 52, 70, 75]
    titles5 = [
        ("Prospectus Summary", "Prospectus Summary", 3),
        ("Risk Factors", "Risk Factors", 5),
        ("Use of Proceeds", "Use of Proceeds", 2),
        ("Dividend Policy", "Dividend Policy", 1),
        ("Capitalization", "Capitalization", 2),
        ("Dilution", "Dilution", 2),
        ("Business", "Business", 4),
        ("Management", "Management", 3),
        ("Underwriting", "Underwriting", 2),
        ("Legal Matters", "Legal Matters", 1),
    ]
    plan5 = [
        {
            "title": t,
            "label": lab,
            "page": pg,
            "paragraphs": n,
            "ending": "clean",
        }
        for (t, lab, n), pg in zip(titles5, pages5)
    ]
    plan5[5]["ending"] = "dangling"
    plan5[6]["images"] = 2
    plan5[7]["images"] = 2
    images5 = [
        {"src": "growthchart.png", "seed": 51},
        {"src": "pipeline3d.png", "seed": 52},
        {"src": "growthchart.png", "seed": 51},
        {"src": "team_photo.png", "seed": 53},
    ]
    meta5 = {
        "company": "SUMMIT ANALYTICS HOLDINGS, INC.",
        "cik": "0001567890",
        "accession": "0001628280-21-009876",
        "form": "S-1/A",
        "date": "2021-04-08",
        "sic": "7372",
        "shares": "12,500,000",
        "seed": 2021,
        "ctx": {
            "co": "Company",
            "state": "Delaware",
            "year": "2015",
            "city": "Denver, Colorado",
            "rev": "88.3",
            "rev2": "54.0",
            "emp": "612",
            "industry": "data analytics software",
        },
    }
    text5, golden5 = build_html_filing(meta5, plan5, images5, anchored=False)
    filings.append((meta5, text5, golden5, "summitanalytics-s1a.htm", images5))

    # -- write everything --------------------------------------------------

    for meta, text, golden, primary, images in filings:
        filing_dir = corpus_dir / meta["accession"]
        filing_dir.mkdir(parents=True, exist_ok=True)
        (filing_dir / primary).write_bytes(text.encode("ascii"))

        documents = [
            {
                "path": primary,
                "content_type": "text/html" if primary.endswith(".htm") else "text/plain",
                "byte_size": len(text),
            }
        ]
        written = set()
        for img in images:
            if img["src"] in written:
                continue
            written.add(img["src"])
            body = make_png(img["seed"]) if img["src"].endswith(".png") else make_gif(img["seed"])
            (filing_dir / img["src"]).write_bytes(body)
            documents.append(
                {
                    "path": img["src"],
                    "content_type": "image/png" if img["src"].endswith(".png") else "image/gif",
                    "byte_size": len(body),
                }
            )

        (filing_dir / "filing.json").write_text(
            json.dumps(
                {
                    "cik": meta["cik"],
                    "ticker": meta.get("ticker"),
                    "accession_number": meta["accession"],
                    "form_type": meta["form"],
                    "filing_date": meta["date"],
                    "sic_code": meta["sic"],
                    "source_format": "html" if primary.endswith(".htm") else "ascii",
                    "primary_document": primary,
                    "documents": documents,
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        (golden_dir / f"{meta['accession']}.json").write_text(
            json.dumps(golden, indent=2) + "\n", encoding="utf-8"
        )

    print(f"wrote {len(filings)} filings under {corpus_dir}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", type=Path)
    args = parser.parse_args()
    build_corpus(args.out)
