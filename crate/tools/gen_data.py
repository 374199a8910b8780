#!/usr/bin/env python3
"""Regenerate the vendored lookup tables under crates/core/data/.

Sources:
  * ISO 639-3 / 639-5 registries as packaged by pycountry (Debian iso-codes).
  * Unicode Scripts.txt as packaged by fontTools.unicodedata.

Usage: pip install pycountry fonttools && python3 tools/gen_data.py
"""
import json
import os
import re

import pycountry
from fontTools.unicodedata import Scripts

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "crates", "core", "data")
PYCOUNTRY_DB = os.path.join(os.path.dirname(pycountry.__file__), "databases")

# Codes that are valid in corpus labels but absent from the active 639-3 table:
# retired 639-3 identifiers still used by OPUS / MaLA language lists.
RETIRED_OVERLAY = {
    "ajp": "South Levantine Arabic (retired 2023, merged into apc)",
    "eml": "Emiliano-Romagnolo (retired 2009, split into egl and rgn)",
}

# Legacy denotations seen in OPUS release metadata that no registry maps.
OPUS_OVERLAY = {
    "iw": "heb",
    "in": "ind",
    "ji": "yid",
    "jw": "jav",
    "mo": "ron",
    "sh": "hbs",
    "zh-yue": "yue",
    "zh-cmn": "cmn",
    "zh-min-nan": "nan",
    "zh-classical": "lzh",
    "zh-wuu": "wuu",
    "be-tarask": "bel",
    "nds-nl": "nds",
    "roa-rup": "rup",
    "bat-smg": "sgs",
    "fiu-vro": "vro",
    "simple": "eng",
    "ze-en": "eng",
    "ze-zh": "zho",
}


def load(name, key):
    with open(os.path.join(PYCOUNTRY_DB, name), encoding="utf-8") as fh:
        return json.load(fh)[key]


def main():
    iso3 = load("iso639-3.json", "639-3")
    iso5 = load("iso639-5.json", "639-5")

    codes = {}
    for row in iso3:
        codes[row["alpha_3"]] = ("639-3", row.get("scope", ""), row["name"])
    for row in iso5:
        codes.setdefault(row["alpha_3"], ("639-5", "C", row["name"]))
    for code, name in RETIRED_OVERLAY.items():
        codes.setdefault(code, ("retired", "I", name))
    # Local-use range qaa..qtz.
    for second in "abcdefghijklmnopqrst":
        for third in "abcdefghijklmnopqrstuvwxyz":
            codes.setdefault("q" + second + third, ("local", "L", "Reserved for local use"))

    with open(os.path.join(OUT, "iso639_codes.tsv"), "w", encoding="utf-8") as fh:
        fh.write("# ISO 639-3 code set (plus 639-5 collectives, retired overlay, local range)\n")
        fh.write("# source: pycountry %s (Debian iso-codes)\n" % pycountry_version())
        fh.write("# code\tregistry\tscope\tname\n")
        for code in sorted(codes):
            reg, scope, name = codes[code]
            fh.write("%s\t%s\t%s\t%s\n" % (code, reg, scope, name))

    aliases = {}
    for row in iso3:
        if "alpha_2" in row:
            aliases[row["alpha_2"]] = row["alpha_3"]
        if "bibliographic" in row and row["bibliographic"] not in codes:
            aliases[row["bibliographic"]] = row["alpha_3"]
    names = {}
    for row in iso3:
        name = row["name"].lower()
        if "(" in name or "," in name:
            continue
        names.setdefault(name, set()).add(row["alpha_3"])
    for name, targets in names.items():
        if len(targets) == 1 and name not in aliases and name not in codes:
            aliases[name] = next(iter(targets))
    for den, code in OPUS_OVERLAY.items():
        assert code in codes, code
        aliases[den] = code

    with open(os.path.join(OUT, "language_aliases.tsv"), "w", encoding="utf-8") as fh:
        fh.write("# denotation -> ISO 639-3\n")
        fh.write("# generated from ISO 639-1 / 639-2B columns and English reference names\n")
        fh.write("# of pycountry %s, plus a hand-curated OPUS legacy overlay\n" % pycountry_version())
        for den in sorted(aliases):
            assert aliases[den] in codes
            fh.write("%s\t%s\n" % (den, aliases[den]))

    version = re.search(r"Scripts-([0-9.]+)\.txt", open(Scripts.__file__, encoding="utf-8").read()).group(1)
    with open(os.path.join(OUT, "scripts.tsv"), "w", encoding="utf-8") as fh:
        fh.write("# Unicode Scripts property, ISO 15924 codes\n")
        fh.write("# unicode-version\t%s\n" % version)
        fh.write("# start\tend\tscript (hex code points, inclusive)\n")
        starts = Scripts.RANGES
        for i, start in enumerate(starts):
            end = (starts[i + 1] - 1) if i + 1 < len(starts) else 0x10FFFF
            script = Scripts.VALUES[i]
            if script == "Zzzz":
                continue
            fh.write("%04X\t%04X\t%s\n" % (start, end, script))


def pycountry_version():
    from importlib.metadata import version
    return version("pycountry")


if __name__ == "__main__":
    main()
