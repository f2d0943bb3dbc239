#include "skillsim/text.hpp"

#include <algorithm>
#include <cstddef>

namespace skillsim {

namespace {

#include "unicode_tables.inc"

constexpr char32_t kReplacement = 0xFFFD;

constexpr char32_t kHangulSBase = 0xAC00;
constexpr char32_t kHangulLBase = 0x1100;
constexpr char32_t kHangulVBase = 0x1161;
constexpr char32_t kHangulTBase = 0x11A7;
constexpr int kHangulVCount = 21;
constexpr int kHangulTCount = 28;
constexpr int kHangulNCount = kHangulVCount * kHangulTCount;  // 588
constexpr int kHangulSCount = 11172;

template <typename Entry, std::size_t N>
const Entry* table_find(const Entry (&table)[N], char32_t cp) {
  auto it = std::lower_bound(std::begin(table), std::end(table), cp,
                             [](const Entry& e, char32_t c) { return e.cp < c; });
  if (it != std::end(table) && it->cp == cp) return it;
  return nullptr;
}

unsigned char combining_class(char32_t cp) {
  const CccEntry* e = table_find(kCccTable, cp);
  return e ? e->ccc : 0;
}

bool is_stripped(char32_t cp) {
  auto it = std::upper_bound(
      std::begin(kStripTable), std::end(kStripTable), cp,
      [](char32_t c, const StripRange& r) { return c < r.lo; });
  if (it == std::begin(kStripTable)) return false;
  --it;
  return cp >= it->lo && cp <= it->hi;
}

void append_lower(std::vector<char32_t>& out, char32_t cp) {
  const LowerEntry* e = table_find(kLowerTable, cp);
  if (!e) {
    out.push_back(cp);
    return;
  }
  for (char32_t m : e->to) {
    if (m == 0) break;
    out.push_back(m);
  }
}

void append_nfd(std::vector<char32_t>& out, char32_t cp) {
  if (cp >= kHangulSBase && cp < kHangulSBase + kHangulSCount) {
    char32_t s = cp - kHangulSBase;
    out.push_back(kHangulLBase + s / kHangulNCount);
    out.push_back(kHangulVBase + (s % kHangulNCount) / kHangulTCount);
    char32_t t = s % kHangulTCount;
    if (t != 0) out.push_back(kHangulTBase + t);
    return;
  }
  const DecompEntry* e = table_find(kDecompTable, cp);
  if (!e) {
    out.push_back(cp);
    return;
  }
  for (int i = 0; i < e->len; ++i) out.push_back(e->to[i]);
}

// Canonical ordering: stable sort of nonzero-ccc runs.
void canonical_order(std::vector<char32_t>& cps) {
  std::size_t i = 0;
  while (i < cps.size()) {
    if (combining_class(cps[i]) == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && combining_class(cps[j]) != 0) ++j;
    std::stable_sort(cps.begin() + i, cps.begin() + j,
                     [](char32_t a, char32_t b) {
                       return combining_class(a) < combining_class(b);
                     });
    i = j;
  }
}

bool compose_pair(char32_t a, char32_t b, char32_t& out) {
  // Algorithmic Hangul composition.
  if (a >= kHangulLBase && a < kHangulLBase + 19 && b >= kHangulVBase &&
      b < kHangulVBase + kHangulVCount) {
    out = kHangulSBase +
          ((a - kHangulLBase) * kHangulVCount + (b - kHangulVBase)) *
              kHangulTCount;
    return true;
  }
  if (a >= kHangulSBase && a < kHangulSBase + kHangulSCount &&
      (a - kHangulSBase) % kHangulTCount == 0 && b > kHangulTBase &&
      b < kHangulTBase + kHangulTCount) {
    out = a + (b - kHangulTBase);
    return true;
  }
  auto it = std::lower_bound(
      std::begin(kComposeTable), std::end(kComposeTable),
      std::pair<char32_t, char32_t>(a, b),
      [](const ComposeEntry& e, const std::pair<char32_t, char32_t>& k) {
        return e.first != k.first ? e.first < k.first : e.second < k.second;
      });
  if (it != std::end(kComposeTable) && it->first == a && it->second == b) {
    out = it->composite;
    return true;
  }
  return false;
}

// UAX #15 canonical composition over an NFD, canonically ordered sequence.
void compose(std::vector<char32_t>& cps) {
  std::vector<char32_t> out;
  out.reserve(cps.size());
  std::ptrdiff_t starter = -1;
  int prev_ccc = -1;  // -1: directly after the starter
  for (char32_t cp : cps) {
    int ccc = combining_class(cp);
    char32_t composite;
    if (starter >= 0 && (prev_ccc < ccc || prev_ccc == -1) &&
        compose_pair(out[starter], cp, composite)) {
      out[starter] = composite;
      continue;
    }
    out.push_back(cp);
    if (ccc == 0) {
      starter = static_cast<std::ptrdiff_t>(out.size()) - 1;
      prev_ccc = -1;
    } else {
      prev_ccc = ccc;
    }
  }
  cps = std::move(out);
}

}  // namespace

std::vector<char32_t> utf8_decode(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    if (b0 < 0x80) {
      cps.push_back(b0);
      ++i;
      continue;
    }
    int len;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      cps.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > text.size()) {
      cps.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      unsigned char bk = static_cast<unsigned char>(text[i + k]);
      if ((bk & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (bk & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range values.
    if (ok) {
      if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
          (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
          (cp >= 0xD800 && cp <= 0xDFFF)) {
        ok = false;
      }
    }
    if (!ok) {
      cps.push_back(kReplacement);
      ++i;
      continue;
    }
    cps.push_back(cp);
    i += len;
  }
  return cps;
}

void utf8_append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string normalize_title(std::string_view text) {
  std::vector<char32_t> cps = utf8_decode(text);

  std::vector<char32_t> lowered;
  lowered.reserve(cps.size());
  for (char32_t cp : cps) append_lower(lowered, cp);

  std::vector<char32_t> nfd;
  nfd.reserve(lowered.size());
  for (char32_t cp : lowered) append_nfd(nfd, cp);
  canonical_order(nfd);
  compose(nfd);

  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t cp : nfd) {
    if (is_stripped(cp)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    utf8_append(out, cp);
  }
  return out;
}

std::vector<std::string_view> split_tokens(std::string_view normalized) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < normalized.size()) {
    std::size_t j = normalized.find(' ', i);
    if (j == std::string_view::npos) j = normalized.size();
    if (j > i) tokens.push_back(normalized.substr(i, j - i));
    i = j + 1;
  }
  return tokens;
}

}  // namespace skillsim
