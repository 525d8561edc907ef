#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace archgen::codecheck {

/// The prompt's improvement rules, checked independently.
enum class Rule {
  NetClass = 1,        // R1: class named exactly Net
  RequiredMethods,     // R2: __init__, forward, train_setup(device), learn(data, target, device)
  Hyperparameters,     // R3: supported_hyperparameters mentioning 'lr' and 'momentum'
  NoTorchvision,       // R4: no torchvision import
  WellFormed,          // R5: balanced brackets, consistent indentation, no stray fences
};

std::string rule_id(Rule r);  // "R1".."R5"

struct Violation {
  Rule rule;
  std::string message;
  int line = 0;  // 0 when the finding concerns the whole file

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  bool passed = true;
  std::vector<Violation> violations;

  bool violates(Rule r) const;
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// Structural check of generated model code. Pure; never throws on bad code.
ValidationReport validate(std::string_view code);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace archgen::codecheck
