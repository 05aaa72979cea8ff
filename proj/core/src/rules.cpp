#include "semqo/rules.hpp"

#include <regex>

#include "semqo/expr.hpp"

namespace semqo {

namespace {

const std::regex kBetween(
    R"((?:between|from)\s+(-?\d+(?:\.\d+)?)\s+(?:and|to)\s+(-?\d+(?:\.\d+)?))",
    std::regex::icase);
const std::regex kGreater(
    R"((?:higher|greater|larger|bigger|more)\s+than\s+(-?\d+(?:\.\d+)?))",
    std::regex::icase);
const std::regex kLess(
    R"((?:lower|less|smaller|fewer)\s+than\s+(-?\d+(?:\.\d+)?))",
    std::regex::icase);
const std::regex kAtLeast(R"(at\s+least\s+(-?\d+(?:\.\d+)?))", std::regex::icase);
const std::regex kAtMost(R"(at\s+most\s+(-?\d+(?:\.\d+)?))", std::regex::icase);
const std::regex kEquals(
    R"((?:is\s+exactly|equals?(?:\s+to)?|is\s+equal\s+to)\s+(-?\d+(?:\.\d+)?))",
    std::regex::icase);

std::optional<std::string> synthesize_clause(const std::string& clause) {
  std::smatch m;
  if (std::regex_search(clause, m, kBetween)) {
    return m[1].str() + " <= value <= " + m[2].str();
  }
  if (std::regex_search(clause, m, kGreater)) return "value > " + m[1].str();
  if (std::regex_search(clause, m, kLess)) return "value < " + m[1].str();
  if (std::regex_search(clause, m, kAtLeast)) return "value >= " + m[1].str();
  if (std::regex_search(clause, m, kAtMost)) return "value <= " + m[1].str();
  if (std::regex_search(clause, m, kEquals)) return "value == " + m[1].str();
  return std::nullopt;
}

std::vector<std::string> split_conjunction(const std::string& text) {
  std::vector<std::string> parts;
  const std::regex sep(R"(\s+and\s+)", std::regex::icase);
  std::sregex_token_iterator it(text.begin(), text.end(), sep, -1), end;
  for (; it != end; ++it) parts.push_back(it->str());
  return parts;
}

OperatorKind compute_kind_of(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Map: return OperatorKind::ComputeMap;
    case OperatorKind::Filter: return OperatorKind::ComputeFilter;
    case OperatorKind::Reduce: return OperatorKind::ComputeReduce;
    default: return kind;
  }
}

}  // namespace

std::optional<std::string> builtin_synthesize(OperatorKind kind,
                                              const std::string& instruction) {
  if (kind != OperatorKind::Filter) return std::nullopt;
  // "between X and Y" carries its own "and"; swap each occurrence for a
  // marker so the conjunction split cannot cut through it, then compile
  // clause by clause (all clauses must compile, or nothing does).
  std::string work = instruction;
  std::vector<std::string> ranges;
  std::smatch m;
  while (std::regex_search(work, m, kBetween)) {
    ranges.push_back(m[1].str() + " <= value <= " + m[2].str());
    work = m.prefix().str() + " __range_" + std::to_string(ranges.size() - 1) +
           "__ " + m.suffix().str();
  }
  static const std::regex kRangeRef(R"(__range_(\d+)__)");
  std::string expr;
  for (const auto& clause : split_conjunction(work)) {
    if (clause.find_first_not_of(" \t.,") == std::string::npos) continue;
    std::optional<std::string> piece;
    std::smatch rm;
    if (std::regex_search(clause, rm, kRangeRef)) {
      piece = ranges.at(std::stoul(rm[1].str()));
    } else {
      piece = synthesize_clause(clause);
    }
    if (!piece) return std::nullopt;
    if (!expr.empty()) expr += " and ";
    expr += *piece;
  }
  if (expr.empty()) return std::nullopt;
  return expr;
}

std::vector<LogicalPlan> apply_filter_pushdown(const LogicalPlan& plan) {
  std::vector<LogicalPlan> candidates;
  const auto& ops = plan.operators;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].kind != OperatorKind::Filter &&
        ops[i].kind != OperatorKind::ComputeFilter) {
      continue;
    }
    // Hop over predecessors that do not produce this filter's input column.
    std::size_t dest = i;
    while (dest > 0) {
      const auto& prev = ops[dest - 1];
      if (prev.output_column && *prev.output_column == ops[i].input_column) break;
      --dest;
    }
    if (dest == i) continue;
    LogicalPlan moved = plan;
    Operator filter = moved.operators[i];
    moved.operators.erase(moved.operators.begin() + static_cast<std::ptrdiff_t>(i));
    moved.operators.insert(moved.operators.begin() + static_cast<std::ptrdiff_t>(dest),
                           std::move(filter));
    moved.rule_applied = "filter-pushdown";
    candidates.push_back(std::move(moved));
  }
  return candidates;
}

std::vector<LogicalPlan> apply_operator_fusion(const LogicalPlan& plan) {
  std::vector<LogicalPlan> candidates;
  const auto& ops = plan.operators;
  std::size_t i = 0;
  while (i < ops.size()) {
    if (ops[i].kind != OperatorKind::Filter) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < ops.size() && ops[j].kind == OperatorKind::Filter &&
           ops[j].input_column == ops[i].input_column) {
      ++j;
    }
    std::size_t run = j - i;
    if (run >= 2) {
      LogicalPlan fused = plan;
      Operator merged = ops[i];
      std::string instruction = ops[i].instruction;
      for (std::size_t k = i + 1; k < j; ++k) {
        instruction += " and " + ops[k].instruction;
      }
      merged.instruction = std::move(instruction);
      merged.selectivity = 0.5 / static_cast<double>(run);
      fused.operators.erase(fused.operators.begin() + static_cast<std::ptrdiff_t>(i),
                            fused.operators.begin() + static_cast<std::ptrdiff_t>(j));
      fused.operators.insert(fused.operators.begin() + static_cast<std::ptrdiff_t>(i),
                             std::move(merged));
      fused.rule_applied = "operator-fusion";
      candidates.push_back(std::move(fused));
    }
    i = j;
  }
  return candidates;
}

std::vector<LogicalPlan> apply_non_llm_replacement(const LogicalPlan& plan,
                                                   const Synthesizer& synthesize) {
  std::vector<LogicalPlan> candidates;
  for (std::size_t i = 0; i < plan.operators.size(); ++i) {
    const auto& op = plan.operators[i];
    if (!is_semantic(op.kind)) continue;
    auto expr = synthesize(op.kind, op.instruction);
    if (!expr) continue;
    // Reject anything that does not parse; rule output must stay valid.
    try {
      Expr::parse(*expr);
    } catch (const InputError&) {
      continue;
    }
    LogicalPlan replaced = plan;
    replaced.operators[i].kind = compute_kind_of(op.kind);
    replaced.operators[i].instruction = *expr;
    replaced.rule_applied = "non-llm-replacement";
    candidates.push_back(std::move(replaced));
  }
  return candidates;
}

RewriterContract rule_based_rewriter(Synthesizer synthesize) {
  return [synthesize = std::move(synthesize)](const LogicalPlan& plan) {
    std::vector<LogicalPlan> candidates;
    for (auto& c : apply_filter_pushdown(plan)) candidates.push_back(std::move(c));
    for (auto& c : apply_operator_fusion(plan)) candidates.push_back(std::move(c));
    for (auto& c : apply_non_llm_replacement(plan, synthesize)) {
      candidates.push_back(std::move(c));
    }
    return candidates;
  };
}

LogicalPlan rewrite(const LogicalPlan& plan, const RewriterContract& rewriter,
                    std::mt19937_64& rng) {
  auto candidates = rewriter(plan);
  std::erase_if(candidates, [&](const LogicalPlan& c) {
    return plans_structurally_equal(c, plan);
  });
  if (candidates.empty()) return plan;
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

LogicalPlan rewrite(const LogicalPlan& plan, const RewriterContract& rewriter,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return rewrite(plan, rewriter, rng);
}

}  // namespace semqo
