#pragma once

#include <string>

#include "flowwarden/fis.hpp"

namespace fw {

// Model file (.fwm): versioned, self-describing text. Header carries the
// schema (feature names + normalization bounds) and FCM parameters; the
// body carries cluster centers and per-rule antecedent/consequent triples.
// Numbers are serialized with 17 significant digits, so a reloaded base
// infers bit-identically.
std::string format_rulebase(const RuleBase& base);
RuleBase parse_rulebase(const std::string& text);

void save_rulebase(const RuleBase& base, const std::string& path);
RuleBase load_rulebase(const std::string& path);

}  // namespace fw
