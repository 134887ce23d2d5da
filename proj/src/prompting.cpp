#include "tropeval/prompting.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "tropeval/hash.hpp"
#include "tropeval/text.hpp"

namespace tropeval {

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

size_t estimate_tokens(const std::vector<ChatMessage>& messages) {
    size_t chars = 0;
    for (const auto& m : messages) chars += m.content.size();
    // 4 chars/token with a 10% safety margin
    return static_cast<size_t>(std::ceil(static_cast<double>(chars) / 4.0 * 1.1));
}

std::string fingerprint_of(const std::vector<ChatMessage>& messages, const Decoding& decoding,
                           const std::string& version) {
    nlohmann::json j;
    j["template_version"] = version;
    j["temperature"] = decoding.temperature;
    if (decoding.max_output_tokens) j["max_output_tokens"] = *decoding.max_output_tokens;
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    j["messages"] = std::move(msgs);
    return sha256_hex(j.dump());
}

// Everything above the line carrying the article becomes the system message
// when the ablation flag is set; each template holds the article exactly once.
std::vector<ChatMessage> to_messages(const std::string& rendered_template,
                                     const std::string& article_line_marker,
                                     const std::string& article, const BuildOptions& options) {
    std::string full = replace_all(rendered_template, article_line_marker, article);
    if (!options.system_instruction) {
        return {ChatMessage{"user", full}};
    }
    size_t marker = rendered_template.find(article_line_marker);
    size_t line_start = rendered_template.rfind('\n', marker);
    line_start = (line_start == std::string::npos) ? 0 : line_start + 1;
    std::string head = text::trim(rendered_template.substr(0, line_start));
    std::string tail =
        replace_all(rendered_template.substr(line_start), article_line_marker, article);
    return {ChatMessage{"system", head}, ChatMessage{"user", tail}};
}

PromptSpec finalize(std::vector<ChatMessage> messages, const TemplateSet& templates,
                    const BuildOptions& options) {
    PromptSpec spec;
    spec.messages = std::move(messages);
    spec.decoding.temperature = 0.0;
    spec.decoding.max_output_tokens = options.max_output_tokens;
    spec.template_version = templates.version();
    spec.estimated_tokens = estimate_tokens(spec.messages);
    if (spec.estimated_tokens > options.max_prompt_tokens) {
        throw BudgetExceeded("prompt estimate " + std::to_string(spec.estimated_tokens) +
                             " tokens exceeds budget " + std::to_string(options.max_prompt_tokens));
    }
    spec.fingerprint = fingerprint_of(spec.messages, spec.decoding, spec.template_version);
    return spec;
}

std::string definitions_block(const TropeCatalog& catalog) {
    std::ostringstream out;
    bool first = true;
    for (const auto& e : catalog.entries()) {
        if (!e.definition) {
            throw ValidationError("with_definitions requested but trope '" + e.name +
                                  "' has no definition in the catalog");
        }
        if (!first) out << "\n";
        out << e.name << ": " << *e.definition;
        first = false;
    }
    return out.str();
}

}  // namespace

const std::string& PromptSpec::user_content() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") return it->content;
    }
    throw std::logic_error("PromptSpec has no user message");
}

std::string PromptSpec::joined_content() const {
    std::string out;
    for (const auto& m : messages) {
        out += m.content;
        out.push_back('\n');
    }
    return out;
}

std::string render_numbered(const Synopsis& synopsis) {
    std::ostringstream out;
    bool first = true;
    for (const auto& s : synopsis.sentences) {
        if (!first) out << "\n";
        out << s.index << ", " << s.text;
        first = false;
    }
    return out.str();
}

PromptSpec build_trope_wise_base(const Synopsis& synopsis, const std::string& trope,
                                 const TemplateSet& templates, const BuildOptions& options) {
    std::string tpl = replace_all(templates.trope_wise_base(), "{trope}", trope);
    auto messages = to_messages(tpl, "{article}", render_numbered(synopsis), options);
    return finalize(std::move(messages), templates, options);
}

PromptSpec build_trope_wise_cot(const Synopsis& synopsis, const std::string& trope,
                                const Exemplar& exemplar, const TemplateSet& templates,
                                const BuildOptions& options) {
    std::string tpl = replace_all(templates.trope_wise_cot(), "{trope}", trope);
    tpl = replace_all(tpl, "{exemplar}", exemplar.render());
    auto messages = to_messages(tpl, "{article}", render_numbered(synopsis), options);
    return finalize(std::move(messages), templates, options);
}

PromptSpec build_multi_label(const Synopsis& synopsis, const TropeCatalog& catalog,
                             PromptMode prompt_mode, bool with_definitions,
                             const TemplateSet& templates, const BuildOptions& options,
                             const std::string& exemplar_id) {
    if (catalog.empty()) throw ValidationError("build_multi_label: empty catalog");
    std::string tpl =
        with_definitions ? templates.multi_label_with_definitions() : templates.multi_label_base();

    std::ostringstream list;
    bool first = true;
    for (const auto& name : catalog.names()) {
        if (!first) list << ", ";
        list << name;
        first = false;
    }
    tpl = replace_all(tpl, "{trope_list}", list.str());
    if (with_definitions) {
        tpl = replace_all(tpl, "{trope_definitions}", definitions_block(catalog));
    }
    std::string exemplar_block;
    if (prompt_mode == PromptMode::cot) {
        exemplar_block = templates.exemplar(exemplar_id).render() + "\n";
    }
    tpl = replace_all(tpl, "{exemplar}", exemplar_block);
    auto messages = to_messages(tpl, "{article}", render_numbered(synopsis), options);
    return finalize(std::move(messages), templates, options);
}

}  // namespace tropeval
