#pragma once

/// Prompt templates are versioned text assets with named {{placeholders}},
/// loaded from a directory and reviewed by golden-file tests. Rendering is
/// strict: unknown placeholders in the template and unused values both fail.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "clara/errors.hpp"

namespace clara {

inline constexpr const char* kTemplateNames[] = {"translate", "evaluate", "critique",
                                                 "rewrite",   "answer",   "direct_cot"};

class PromptTemplates {
 public:
  /// Loads <dir>/{translate,evaluate,critique,rewrite,answer,direct_cot}.txt.
  /// Throws PromptError when a file is missing.
  static PromptTemplates load(const std::filesystem::path& dir);

  /// Substitutes every {{name}}; a placeholder without a value throws
  /// PromptError naming it.
  std::string render(std::string_view template_name,
                     const std::map<std::string, std::string>& values) const;

  const std::string& raw(std::string_view template_name) const;

 private:
  std::map<std::string, std::string> templates_;
};

/// Exposed for tests: single-pass {{name}} expansion over any text.
std::string render_template_text(std::string_view text,
                                 const std::map<std::string, std::string>& values);

}  // namespace clara
