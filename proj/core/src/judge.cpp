#include "semqo/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

#include "semqo/expr.hpp"

namespace semqo {

JudgeScore make_judge_score(int raw) {
  raw = std::clamp(raw, 0, 10);
  return {raw, raw / 10.0};
}

namespace {

bool cells_equal(const Cell& a, const Cell& b) {
  std::string x = a ? *a : "";
  std::string y = b ? *b : "";
  return normalize_text(x) == normalize_text(y);
}

}  // namespace

JudgeScore exact_judge(const Table& a, const Table& b) {
  std::set<std::uint64_t> rows_a, rows_b;
  std::unordered_map<std::uint64_t, std::size_t> pos_a, pos_b;
  for (std::size_t i = 0; i < a.rows().size(); ++i) {
    rows_a.insert(a.rows()[i].index);
    pos_a[a.rows()[i].index] = i;
  }
  for (std::size_t i = 0; i < b.rows().size(); ++i) {
    rows_b.insert(b.rows()[i].index);
    pos_b[b.rows()[i].index] = i;
  }

  std::size_t shared = 0;
  for (auto idx : rows_a) shared += rows_b.count(idx);
  std::size_t unioned = rows_a.size() + rows_b.size() - shared;

  bool same_rows = rows_a == rows_b;
  bool same_columns = a.column_count() == b.column_count();
  if (same_columns) {
    for (std::size_t c = 0; c < a.column_count(); ++c) {
      if (a.schema()[c].name != b.schema()[c].name) same_columns = false;
    }
  }
  bool cells_match = same_rows && same_columns;
  if (cells_match) {
    for (auto idx : rows_a) {
      const auto& ra = a.rows()[pos_a[idx]];
      const auto& rb = b.rows()[pos_b[idx]];
      for (std::size_t c = 0; c < a.column_count() && cells_match; ++c) {
        Cell ca = c < ra.cells.size() ? ra.cells[c] : Cell{};
        Cell cb = c < rb.cells.size() ? rb.cells[c] : Cell{};
        cells_match = cells_equal(ca, cb);
      }
      if (!cells_match) break;
    }
  }
  if (cells_match) return make_judge_score(10);

  if (unioned == 0) return make_judge_score(10);  // both empty, same result
  double jaccard = static_cast<double>(shared) / static_cast<double>(unioned);
  int raw = static_cast<int>(std::floor(10.0 * jaccard));
  // Identical row sets with differing cells are close but not exact.
  if (raw == 10) raw = 9;
  return make_judge_score(raw);
}

const char* const kDefaultJudgePromptTemplate =
    "You compare the outputs of two versions of a data analytics plan.\n"
    "Rate how semantically consistent output B is with output A on a scale\n"
    "from 0 (completely different) to 10 (exactly the same). Reply with the\n"
    "rating as a single integer.\n\n"
    "Output A:\n{outputs_a}\n\nOutput B:\n{outputs_b}\n";

namespace {

std::string replace_all(std::string text, const std::string& needle,
                        const std::string& replacement) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), replacement);
    pos += replacement.size();
  }
  return text;
}

}  // namespace

std::string render_judge_prompt(const Table& a, const Table& b,
                                const std::string& prompt_template) {
  std::string prompt = prompt_template;
  prompt = replace_all(prompt, "{outputs_a}", serialize_table_jsonl(a));
  prompt = replace_all(prompt, "{outputs_b}", serialize_table_jsonl(b));
  return prompt;
}

JudgeScore llm_judge(const Table& a, const Table& b,
                     const std::function<std::string(const std::string&)>& complete,
                     const std::string& prompt_template) {
  std::string reply = complete(render_judge_prompt(a, b, prompt_template));
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
      std::size_t end = i;
      while (end < reply.size() &&
             std::isdigit(static_cast<unsigned char>(reply[end]))) {
        ++end;
      }
      long value = std::stol(reply.substr(i, end - i));
      return make_judge_score(static_cast<int>(std::min(value, 10L)));
    }
  }
  throw JudgeError("judge reply holds no rating integer: " + reply);
}

}  // namespace semqo
