#include "ape/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ape/error.hpp"

namespace ape {

namespace {

void check_sequence(const Tokens& tokens, std::string_view name) {
  if (tokens.empty()) throw DataError(std::string(name) + " is empty");
  for (const auto& t : tokens) {
    if (Vocab::is_reserved_token(t)) {
      throw DataError(std::string(name) + " contains reserved token " + t);
    }
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace

void validate(const ApeExample& example) {
  check_sequence(example.src, "src");
  check_sequence(example.mt, "mt");
  check_sequence(example.pe, "pe");
  if (example.mt_ext) check_sequence(*example.mt_ext, "mt_ext");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Step1: return "step1";
    case Stage::Step2: return "step2";
    case Stage::Step3: return "step3";
    case Stage::FineTune: return "finetune";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  if (name == "step1") return Stage::Step1;
  if (name == "step2") return Stage::Step2;
  if (name == "step3") return Stage::Step3;
  if (name == "finetune") return Stage::FineTune;
  throw ConfigError("unknown stage: " + std::string(name));
}

Tokens encoder_tokens(const ApeExample& example, Stage stage) {
  Tokens out = example.src;
  if (stage == Stage::Step1) return out;
  if (!example.has_mt()) throw MissingSegment("stage " + std::string(to_string(stage)) + " needs mt");
  out.emplace_back(Vocab::kSepToken);
  out.insert(out.end(), example.mt.begin(), example.mt.end());
  if (stage == Stage::Step2) return out;
  if (!example.has_mt_ext()) {
    throw MissingSegment("stage " + std::string(to_string(stage)) + " needs mt_ext");
  }
  out.emplace_back(Vocab::kSepToken);
  out.insert(out.end(), example.mt_ext->begin(), example.mt_ext->end());
  return out;
}

StageInput assemble_stage_input(const ApeExample& example, Stage stage, const Vocab& vocab) {
  if (example.src.empty()) throw EmptyInput("src is empty");
  if (example.pe.empty()) throw EmptyInput("pe is empty");

  StageInput in;
  in.stage = stage;
  in.encoder_ids = to_ids(encoder_tokens(example, stage), vocab);

  const std::size_t n = example.src.size();
  in.segments.src = {0, n};
  if (stage != Stage::Step1) {
    const std::size_t m = example.mt.size();
    in.segments.mt = Span{n + 1, n + 1 + m};
    if (stage != Stage::Step2) {
      in.segments.mt_ext = Span{n + m + 2, n + m + 2 + example.mt_ext->size()};
    }
  }

  in.decoder_target_ids.reserve(example.pe.size() + 2);
  in.decoder_target_ids.push_back(Vocab::kBos);
  for (const auto& t : example.pe) in.decoder_target_ids.push_back(vocab.id(t));
  in.decoder_target_ids.push_back(Vocab::kEos);
  return in;
}

std::vector<std::string> numeric_tokens(const Tokens& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    std::size_t i = 0;
    while (i < t.size()) {
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < t.size() && std::isdigit(static_cast<unsigned char>(t[j]))) ++j;
      out.push_back(t.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

bool number_filter(const ApeExample& example) {
  auto a = numeric_tokens(example.src);
  auto b = numeric_tokens(example.pe);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

std::vector<ApeExample> apply_number_filter(const std::vector<ApeExample>& corpus) {
  std::vector<ApeExample> kept;
  kept.reserve(corpus.size());
  std::copy_if(corpus.begin(), corpus.end(), std::back_inserter(kept), number_filter);
  return kept;
}

std::vector<ApeExample> read_corpus(std::istream& in) {
  std::vector<ApeExample> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw DataError("line " + std::to_string(line_no) + ": expected 3 or 4 tab-separated columns");
    }
    ApeExample ex;
    ex.src = split_whitespace(fields[0]);
    ex.mt = split_whitespace(fields[1]);
    ex.pe = split_whitespace(fields[2]);
    if (fields.size() == 4) {
      auto ext = split_whitespace(fields[3]);
      if (!ext.empty()) ex.mt_ext = std::move(ext);
    }
    try {
      validate(ex);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

std::vector<ApeExample> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<ApeExample>& corpus) {
  out << "# src\tmt\tpe\tmt_ext\n";
  for (const auto& ex : corpus) {
    out << join_tokens(ex.src) << '\t' << join_tokens(ex.mt) << '\t' << join_tokens(ex.pe) << '\t'
        << (ex.mt_ext ? join_tokens(*ex.mt_ext) : std::string()) << '\n';
  }
}

void write_corpus_file(const std::string& path, const std::vector<ApeExample>& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_corpus(out, corpus);
}

}  // namespace ape
