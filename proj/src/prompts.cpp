#include "clara/prompts.hpp"

#include "clara/util.hpp"

namespace clara {

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates templates;
  for (const char* name : kTemplateNames) {
    std::filesystem::path file = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(file)) {
      throw PromptError("missing prompt template: " + file.string());
    }
    templates.templates_[name] = read_file(file);
  }
  return templates;
}

const std::string& PromptTemplates::raw(std::string_view template_name) const {
  auto it = templates_.find(std::string(template_name));
  if (it == templates_.end()) {
    throw PromptError("unknown prompt template '" + std::string(template_name) + "'");
  }
  return it->second;
}

std::string PromptTemplates::render(std::string_view template_name,
                                    const std::map<std::string, std::string>& values) const {
  return render_template_text(raw(template_name), values);
}

std::string render_template_text(std::string_view text,
                                 const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw PromptError("unterminated placeholder near offset " + std::to_string(open));
    }
    out.append(text.substr(pos, open - pos));
    std::string name(text.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it == values.end()) {
      throw PromptError("no value supplied for placeholder {{" + name + "}}");
    }
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

}  // namespace clara
