#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "semqo/table.hpp"

namespace semqo {

class JudgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JudgeScore {
  int raw = 0;  // 0..10
  double normalized = 0.0;
};

JudgeScore make_judge_score(int raw);

/// Scores the equivalence of two plan-output tables.
using JudgeContract =
    std::function<JudgeScore(const Table& a, const Table& b)>;

/// Deterministic oracle judge: 10 iff identical surviving row-index sets
/// and cell-wise equal columns (case-folded, whitespace-normalized);
/// otherwise floor(10 * Jaccard overlap of the row-index sets), capped at
/// 9 when only cell contents differ.
JudgeScore exact_judge(const Table& a, const Table& b);

/// Judge prompt template; placeholders {outputs_a} and {outputs_b} receive
/// the canonical JSONL serialization of each result table.
extern const char* const kDefaultJudgePromptTemplate;

std::string render_judge_prompt(const Table& a, const Table& b,
                                const std::string& prompt_template =
                                    kDefaultJudgePromptTemplate);

/// Prompts an LLM for a 0..10 similarity rating; the rating is the first
/// decimal integer in the reply, clamped to 0..10. Throws JudgeError when
/// the reply holds no integer.
JudgeScore llm_judge(const Table& a, const Table& b,
                     const std::function<std::string(const std::string&)>& complete,
                     const std::string& prompt_template =
                         kDefaultJudgePromptTemplate);

}  // namespace semqo
