#include "ape/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ape/error.hpp"
#include "ape/rng.hpp"

namespace ape {

namespace {

constexpr std::string_view kSourceSuffix = "o";

const std::vector<std::string> kDet = {"der", "die", "das", "ein", "eine", "den", "dem", "des"};
const std::vector<std::string> kAdj = {"gross", "klein",  "alt",  "neu",  "schnell", "langsam", "rot",
                                       "blau",  "gruen",  "hell", "dunkel", "gut",   "schlecht", "warm",
                                       "kalt",  "hoch",   "tief", "leise", "laut",   "stark"};
const std::vector<std::string> kNoun = {
    "haus",  "katze",   "hund",   "stadt",  "mann",  "frau",   "kind",    "wagen", "buch",  "tisch",
    "baum",  "garten",  "schule", "kirche", "strasse", "fenster", "tuer", "brief", "zug",   "bahn",
    "markt", "preis",   "firma",  "vertrag", "bericht", "plan",   "weg",   "fluss", "berg",  "see",
    "wald",  "feld",    "stuhl",  "lampe",  "uhr",   "bild",   "lied",    "spiel", "geld",  "arbeit"};
const std::vector<std::string> kVerb = {"sieht",  "kauft", "findet",  "liebt",     "baut",     "malt",  "liest",
                                        "schreibt", "bringt", "nimmt", "sucht",   "zeigt",     "oeffnet", "schliesst",
                                        "verkauft", "braucht", "kennt", "hat",    "macht",     "traegt"};
const std::vector<std::string> kAdp = {"in", "auf", "unter", "neben", "mit", "ohne", "fuer", "nach"};
const std::vector<std::string> kAdv = {"heute", "gestern", "oft", "nie", "bald", "hier", "dort", "sehr", "schon", "immer"};
const std::vector<std::string> kConj = {"und", "aber", "oder"};
const std::vector<std::string> kNum = {"2",  "3",  "5",   "7",   "10",  "12",  "15",  "20",   "24",  "30",
                                       "42", "50", "64",  "99",  "100", "120", "365", "500",  "1000", "2021"};
const std::vector<std::string> kPer = {"anna", "berta", "karl", "lena", "paul", "emil", "greta", "hans", "marie", "felix"};
const std::vector<std::string> kLoc = {"berlin", "paris", "wien", "rom", "madrid", "prag", "bern", "hamburg", "dresden", "london"};
const std::vector<std::string> kOrg = {"siemens", "bosch", "adidas", "bayer", "lufthansa", "porsche", "allianz", "merck"};

struct Slot {
  PosTag pos;
  NerTag ner = NerTag::O;
  bool optional = false;
};

struct Template {
  std::vector<Slot> slots;
  double weight;
};

Slot det() { return {PosTag::Det}; }
Slot adj_opt() { return {PosTag::Adj, NerTag::O, true}; }
Slot noun() { return {PosTag::Noun}; }
Slot verb() { return {PosTag::Verb}; }
Slot adp() { return {PosTag::Adp}; }
Slot adv() { return {PosTag::Adv}; }
Slot adv_opt() { return {PosTag::Adv, NerTag::O, true}; }
Slot conj() { return {PosTag::Conj}; }
Slot num() { return {PosTag::Num}; }
Slot per() { return {PosTag::Propn, NerTag::Per}; }
Slot loc() { return {PosTag::Propn, NerTag::Loc}; }
Slot org() { return {PosTag::Propn, NerTag::Org}; }

const std::vector<Template>& news_templates() {
  static const std::vector<Template> t = {
      {{det(), adj_opt(), noun(), verb(), det(), adj_opt(), noun()}, 3.0},
      {{per(), verb(), num(), noun()}, 1.0},
      {{per(), verb(), num(), noun(), adp(), loc()}, 1.0},
      {{adv_opt(), org(), verb(), det(), adj_opt(), noun(), adp(), loc()}, 2.0},
      {{det(), noun(), adp(), loc(), verb(), num(), noun(), conj(), det(), noun()}, 1.0},
      {{per(), conj(), per(), verb(), det(), adj_opt(), noun(), adv_opt()}, 1.0},
  };
  return t;
}

const std::vector<Template>& ape_templates() {
  static const std::vector<Template> t = {
      {{loc(), verb(), det(), adj_opt(), noun(), adp(), num()}, 3.0},
      {{det(), adj_opt(), noun(), verb(), det(), adj_opt(), noun()}, 2.0},
      {{det(), adj_opt(), noun(), adp(), det(), noun(), verb(), adv()}, 2.0},
      {{org(), verb(), num(), noun(), conj(), det(), adj_opt(), noun()}, 2.0},
      {{adv_opt(), org(), verb(), det(), adj_opt(), noun(), adp(), loc()}, 1.0},
  };
  return t;
}

// Zipf(1) draw over `n` ranked items; `reversed` flips the ranking.
std::size_t zipf_index(Rng& rng, std::size_t n, bool reversed) {
  double total = 0.0;
  for (std::size_t r = 1; r <= n; ++r) total += 1.0 / static_cast<double>(r);
  double u = rng.uniform01() * total;
  std::size_t rank = n - 1;
  for (std::size_t r = 0; r < n; ++r) {
    u -= 1.0 / static_cast<double>(r + 1);
    if (u < 0.0) {
      rank = r;
      break;
    }
  }
  return reversed ? n - 1 - rank : rank;
}

const Template& pick_template(Rng& rng, const std::vector<Template>& templates) {
  double total = 0.0;
  for (const auto& t : templates) total += t.weight;
  double u = rng.uniform01() * total;
  for (const auto& t : templates) {
    u -= t.weight;
    if (u < 0.0) return t;
  }
  return templates.back();
}

const std::vector<std::size_t>& candidates(const Lexicon& lex, const Slot& slot) {
  return slot.pos == PosTag::Propn ? lex.names(slot.ner) : lex.words(slot.pos);
}

Tokens sample_sentence(Rng& rng, const Lexicon& lex, Domain domain) {
  bool ape_side = domain == Domain::Ape;
  if (domain == Domain::Mixed) ape_side = rng.bernoulli(0.5);
  const auto& tpl = pick_template(rng, ape_side ? ape_templates() : news_templates());
  Tokens out;
  for (const auto& slot : tpl.slots) {
    if (slot.optional && !rng.bernoulli(0.5)) continue;
    const auto& pool = candidates(lex, slot);
    out.push_back(lex.entries()[pool[zipf_index(rng, pool.size(), ape_side)]].target);
  }
  return out;
}

std::string substitute(Rng& rng, const Lexicon& lex, const std::string& token) {
  const LexEntry* e = lex.find(token);
  const auto& pool = (e && e->pos == PosTag::Propn) ? lex.names(e->ner) : lex.words(e ? e->pos : PosTag::Noun);
  if (pool.size() < 2) return token;
  while (true) {
    const auto& cand = lex.entries()[rng.pick(pool)].target;
    if (cand != token) return cand;
  }
}

std::string random_word(Rng& rng, const Lexicon& lex) {
  while (true) {
    const auto& e = lex.entries()[rng.uniform_index(lex.entries().size())];
    if (e.pos != PosTag::Propn && e.pos != PosTag::Num) return e.target;
  }
}

Tokens corrupt(Rng& rng, const Lexicon& lex, const Tokens& pe, double rate) {
  Tokens out;
  out.reserve(pe.size() + 4);
  for (const auto& tok : pe) {
    if (!rng.bernoulli(rate)) {
      out.push_back(tok);
      continue;
    }
    switch (rng.uniform_index(3)) {
      case 0: out.push_back(substitute(rng, lex, tok)); break;
      case 1: break;
      default:
        out.push_back(random_word(rng, lex));
        out.push_back(tok);
        break;
    }
  }
  if (out.empty()) out.push_back(substitute(rng, lex, pe.front()));
  return out;
}

void break_a_number(Rng& rng, const Lexicon& lex, Tokens& pe) {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < pe.size(); ++i) {
    if (lex.pos_of(pe[i]) == PosTag::Num) positions.push_back(i);
  }
  if (positions.empty()) return;
  auto& tok = pe[rng.pick(positions)];
  tok = substitute(rng, lex, tok);
}

}  // namespace

std::string_view to_string(PosTag tag) {
  static constexpr std::string_view names[] = {"X",   "DET", "ADJ",  "NOUN", "VERB",
                                               "ADP", "ADV", "CONJ", "NUM",  "PROPN"};
  return names[static_cast<int>(tag)];
}

std::string_view to_string(NerTag tag) {
  static constexpr std::string_view names[] = {"O", "PER", "LOC", "ORG"};
  return names[static_cast<int>(tag)];
}

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::News: return "news";
    case Domain::Ape: return "ape";
    case Domain::Mixed: return "mixed";
  }
  return "?";
}

Lexicon::Lexicon() : by_pos_(kNumPosTags), by_ner_(kNumNerTags) {
  auto add_words = [&](const std::vector<std::string>& words, PosTag pos) {
    for (const auto& w : words) {
      if (w.ends_with(kSourceSuffix)) throw std::logic_error("lexicon word ends with source suffix: " + w);
      entries_.push_back({w, w + std::string(kSourceSuffix), pos, NerTag::O});
    }
  };
  auto add_shared = [&](const std::vector<std::string>& words, PosTag pos, NerTag ner) {
    for (const auto& w : words) entries_.push_back({w, w, pos, ner});
  };
  add_words(kDet, PosTag::Det);
  add_words(kAdj, PosTag::Adj);
  add_words(kNoun, PosTag::Noun);
  add_words(kVerb, PosTag::Verb);
  add_words(kAdp, PosTag::Adp);
  add_words(kAdv, PosTag::Adv);
  add_words(kConj, PosTag::Conj);
  add_shared(kNum, PosTag::Num, NerTag::O);
  add_shared(kPer, PosTag::Propn, NerTag::Per);
  add_shared(kLoc, PosTag::Propn, NerTag::Loc);
  add_shared(kOrg, PosTag::Propn, NerTag::Org);

  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!by_target_.emplace(e.target, i).second || !by_source_.emplace(e.source, i).second) {
      throw std::logic_error("duplicate lexicon word: " + e.target);
    }
    by_pos_[static_cast<int>(e.pos)].push_back(i);
    if (e.pos == PosTag::Propn) by_ner_[static_cast<int>(e.ner)].push_back(i);
  }
  // Source words may only collide with target words when they are the same entry.
  for (const auto& [src, i] : by_source_) {
    auto it = by_target_.find(src);
    if (it != by_target_.end() && it->second != i) throw std::logic_error("ambiguous word: " + src);
  }
}

const Lexicon& Lexicon::standard() {
  static const Lexicon lex;
  return lex;
}

const LexEntry* Lexicon::find(std::string_view token) const {
  const std::string key(token);
  if (auto it = by_target_.find(key); it != by_target_.end()) return &entries_[it->second];
  if (auto it = by_source_.find(key); it != by_source_.end()) return &entries_[it->second];
  return nullptr;
}

const std::string& Lexicon::to_source(std::string_view target) const {
  auto it = by_target_.find(std::string(target));
  if (it == by_target_.end()) throw DataError("not a target word: " + std::string(target));
  return entries_[it->second].source;
}

const std::string& Lexicon::to_target(std::string_view source) const {
  auto it = by_source_.find(std::string(source));
  if (it == by_source_.end()) throw DataError("not a source word: " + std::string(source));
  return entries_[it->second].target;
}

PosTag Lexicon::pos_of(std::string_view token) const {
  const LexEntry* e = find(token);
  return e ? e->pos : PosTag::X;
}

NerTag Lexicon::ner_of(std::string_view token) const {
  const LexEntry* e = find(token);
  return e ? e->ner : NerTag::O;
}

const std::vector<std::size_t>& Lexicon::words(PosTag pos) const { return by_pos_[static_cast<int>(pos)]; }

const std::vector<std::size_t>& Lexicon::names(NerTag ner) const { return by_ner_[static_cast<int>(ner)]; }

Vocab Lexicon::make_vocab() const {
  Vocab v;
  for (const auto& e : entries_) v.add(e.target);
  for (const auto& e : entries_) v.add(e.source);
  return v;
}

NoiseProfile NoiseProfile::news() { return {0.25, 0.15, false, 0.03, Domain::News}; }
NoiseProfile NoiseProfile::ape() { return {0.15, 0.12, true, 0.0, Domain::Ape}; }
NoiseProfile NoiseProfile::mixed() { return {0.2, 0.12, true, 0.0, Domain::Mixed}; }

NoiseProfile NoiseProfile::named(std::string_view name) {
  if (name == "news") return news();
  if (name == "ape") return ape();
  throw ConfigError("unknown profile: " + std::string(name));
}

void NoiseProfile::validate() const {
  auto in_unit = [](double r) { return std::isfinite(r) && r >= 0.0 && r <= 1.0; };
  if (!in_unit(mt_rate) || !in_unit(ext_rate) || !in_unit(number_mismatch_rate)) {
    throw ConfigError("noise rates must lie in [0, 1]");
  }
}

Tokens target_to_source(const Tokens& pe) {
  const auto& lex = Lexicon::standard();
  Tokens order = pe;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    if (lex.pos_of(order[i]) == PosTag::Adj && lex.pos_of(order[i + 1]) == PosTag::Noun) {
      std::swap(order[i], order[i + 1]);
      ++i;
    }
  }
  Tokens src;
  src.reserve(order.size());
  for (const auto& t : order) src.push_back(lex.to_source(t));
  return src;
}

Tokens source_to_target(const Tokens& src) {
  const auto& lex = Lexicon::standard();
  Tokens out;
  out.reserve(src.size());
  for (const auto& t : src) out.push_back(lex.to_target(t));
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (lex.pos_of(out[i]) == PosTag::Noun && lex.pos_of(out[i + 1]) == PosTag::Adj) {
      std::swap(out[i], out[i + 1]);
      ++i;
    }
  }
  return out;
}

std::vector<ApeExample> generate_synthetic_corpus(std::uint64_t seed, std::size_t n_examples,
                                                  const NoiseProfile& profile) {
  if (n_examples == 0) throw ConfigError("n_examples must be at least 1");
  profile.validate();
  const auto& lex = Lexicon::standard();
  Rng rng(seed);
  std::vector<ApeExample> corpus;
  corpus.reserve(n_examples);
  for (std::size_t i = 0; i < n_examples; ++i) {
    ApeExample ex;
    ex.pe = sample_sentence(rng, lex, profile.domain);
    ex.src = target_to_source(ex.pe);
    if (profile.number_mismatch_rate > 0.0 && rng.bernoulli(profile.number_mismatch_rate)) {
      break_a_number(rng, lex, ex.pe);
    }
    ex.mt = corrupt(rng, lex, ex.pe, profile.mt_rate);
    if (profile.with_ext) ex.mt_ext = corrupt(rng, lex, ex.pe, profile.ext_rate);
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace ape
