#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace peacelens {

// Placeholders are `{name}` with name in [a-z_]+. Any other brace is literal.
std::set<std::string> template_placeholders(std::string_view tmpl);

// Single pass; substituted values are never rescanned. Throws Error
// "unknown placeholder <name>" for names not in values.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace peacelens
