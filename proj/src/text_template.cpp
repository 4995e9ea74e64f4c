#include "peacelens/text_template.hpp"

#include "peacelens/errors.hpp"

namespace peacelens {
namespace {

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Length of a placeholder starting at tmpl[pos] == '{', or 0 if not one.
std::size_t placeholder_len(std::string_view tmpl, std::size_t pos) {
    std::size_t i = pos + 1;
    while (i < tmpl.size() && is_name_char(tmpl[i])) ++i;
    if (i == pos + 1 || i >= tmpl.size() || tmpl[i] != '}') return 0;
    return i - pos + 1;
}

}  // namespace

std::set<std::string> template_placeholders(std::string_view tmpl) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != '{') continue;
        if (auto n = placeholder_len(tmpl, i)) {
            names.emplace(tmpl.substr(i + 1, n - 2));
            i += n - 1;
        }
    }
    return names;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '{') {
            if (auto n = placeholder_len(tmpl, i)) {
                std::string name(tmpl.substr(i + 1, n - 2));
                auto it = values.find(name);
                if (it == values.end()) throw Error("unknown placeholder " + name);
                out += it->second;
                i += n - 1;
                continue;
            }
        }
        out += tmpl[i];
    }
    return out;
}

}  // namespace peacelens
