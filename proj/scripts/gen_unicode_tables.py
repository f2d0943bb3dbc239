#!/usr/bin/env python3
"""Regenerates core/src/unicode_tables.inc from Python's unicodedata.

The tables drive title normalization: full lowercase mappings, canonical
(NFD) decompositions, combining classes, primary composites for NFC, and
the codepoint intervals that are stripped to spaces (categories P*, Z*, C*).

Usage: python3 scripts/gen_unicode_tables.py > core/src/unicode_tables.inc
"""

import sys
import unicodedata

HANGUL_FIRST = 0xAC00
HANGUL_LAST = 0xD7A3
MAX_CP = 0x110000


def is_hangul_syllable(cp):
    return HANGUL_FIRST <= cp <= HANGUL_LAST


def gen():
    lower = []   # (cp, [mapped cps]) where lower() changes the char
    decomp = []  # (cp, [full canonical decomposition]) excluding Hangul
    ccc = []     # (cp, combining class) where nonzero
    compose = [] # (starter, combiner, composite)
    strip = []   # intervals of codepoints replaced by a space

    run_start = None
    prev_in_run = None
    for cp in range(MAX_CP):
        if 0xD800 <= cp <= 0xDFFF:
            ch = None
        else:
            ch = chr(cp)

        if ch is not None:
            lo = ch.lower()
            if lo != ch and len(lo) <= 3:
                lower.append((cp, [ord(c) for c in lo]))

            cc = unicodedata.combining(ch)
            if cc != 0:
                ccc.append((cp, cc))

            if not is_hangul_syllable(cp):
                d = unicodedata.normalize("NFD", ch)
                if d != ch and len(d) <= 4:
                    decomp.append((cp, [ord(c) for c in d]))
                raw = unicodedata.decomposition(ch)
                if raw and not raw.startswith("<"):
                    parts = [int(p, 16) for p in raw.split()]
                    if len(parts) == 2:
                        pair = chr(parts[0]) + chr(parts[1])
                        if unicodedata.normalize("NFC", pair) == ch:
                            compose.append((parts[0], parts[1], cp))

        cat = unicodedata.category(ch) if ch is not None else "Cs"
        stripped = cat[0] in ("P", "Z", "C")
        if stripped:
            if run_start is None:
                run_start = cp
            prev_in_run = cp
        else:
            if run_start is not None:
                strip.append((run_start, prev_in_run))
                run_start = None
    if run_start is not None:
        strip.append((run_start, prev_in_run))

    compose.sort()

    out = sys.stdout
    out.write("// Generated by scripts/gen_unicode_tables.py (Unicode %s). Do not edit.\n\n"
              % unicodedata.unidata_version)

    out.write("struct LowerEntry { char32_t cp; char32_t to[3]; };\n")
    out.write("static const LowerEntry kLowerTable[] = {\n")
    for cp, to in lower:
        padded = to + [0] * (3 - len(to))
        out.write("  {0x%X,{0x%X,0x%X,0x%X}},\n" % (cp, *padded))
    out.write("};\n\n")

    out.write("struct DecompEntry { char32_t cp; unsigned char len; char32_t to[4]; };\n")
    out.write("static const DecompEntry kDecompTable[] = {\n")
    for cp, to in decomp:
        padded = to + [0] * (4 - len(to))
        out.write("  {0x%X,%d,{0x%X,0x%X,0x%X,0x%X}},\n" % (cp, len(to), *padded))
    out.write("};\n\n")

    out.write("struct CccEntry { char32_t cp; unsigned char ccc; };\n")
    out.write("static const CccEntry kCccTable[] = {\n")
    for cp, cc in ccc:
        out.write("  {0x%X,%d},\n" % (cp, cc))
    out.write("};\n\n")

    out.write("struct ComposeEntry { char32_t first; char32_t second; char32_t composite; };\n")
    out.write("static const ComposeEntry kComposeTable[] = {\n")
    for a, b, c in compose:
        out.write("  {0x%X,0x%X,0x%X},\n" % (a, b, c))
    out.write("};\n\n")

    out.write("struct StripRange { char32_t lo; char32_t hi; };\n")
    out.write("static const StripRange kStripTable[] = {\n")
    for lo, hi in strip:
        out.write("  {0x%X,0x%X},\n" % (lo, hi))
    out.write("};\n")


if __name__ == "__main__":
    gen()
