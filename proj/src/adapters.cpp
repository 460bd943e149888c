// Ingestion adapters for the five source corpora. Each adapter normalizes
// its source layout into the canonical in-memory Corpus; docs/adapters.md
// describes the expected file layouts.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rolemask/corpus.hpp"

namespace fs = std::filesystem;

namespace rolemask {

namespace {

// ---------------------------------------------------------------- utilities

std::string basename_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

bool contains_cjk(const std::string& text) {
  // Decode UTF-8 and look for CJK ideographs or kana.
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = text[i];
    unsigned cp = 0;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < text.size()) {
      cp = (c & 0x1F) << 6 | (text[i + 1] & 0x3F);
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < text.size()) {
      cp = (c & 0x0F) << 12 | (text[i + 1] & 0x3F) << 6 | (text[i + 2] & 0x3F);
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < text.size()) {
      cp = (c & 0x07) << 18 | (text[i + 1] & 0x3F) << 12 |
           (text[i + 2] & 0x3F) << 6 | (text[i + 3] & 0x3F);
      len = 4;
    }
    if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
        (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0xF900 && cp <= 0xFAFF))
      return true;
    i += len;
  }
  return false;
}

void merge_overlaps(std::vector<Span>& spans) {
  if (spans.size() < 2) return;
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  std::vector<Span> merged;
  for (const Span& s : spans) {
    if (!merged.empty() && s.start < merged.back().end)
      merged.back().end = std::max(merged.back().end, s.end);
    else
      merged.push_back(s);
  }
  spans = std::move(merged);
}

// Splits "a|b|c"; empty pieces are dropped.
std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// ------------------------------------------------- tagged text (ES and ECA)

// Removes <cause>..<\cause> (or </cause>) markup from a line and records the
// character ranges of the cause contents within the cleaned string.
struct TaggedLine {
  std::string clean;
  std::vector<std::pair<std::size_t, std::size_t>> causes;
};

TaggedLine strip_cause_tags(const std::string& text, const std::string& where) {
  TaggedLine out;
  std::size_t i = 0;
  bool open = false;
  std::size_t open_at = 0;
  while (i < text.size()) {
    if (text.compare(i, 7, "<cause>") == 0) {
      if (open) throw CorpusError(where + ": nested <cause> tag");
      open = true;
      open_at = out.clean.size();
      i += 7;
    } else if (text.compare(i, 8, "<\\cause>") == 0 ||
               text.compare(i, 8, "</cause>") == 0) {
      if (!open) throw CorpusError(where + ": unmatched cause close tag");
      open = false;
      out.causes.emplace_back(open_at, out.clean.size());
      i += 8;
    } else {
      out.clean += text[i];
      ++i;
    }
  }
  if (open) throw CorpusError(where + ": unclosed <cause> tag");
  return out;
}

// Parses one "<emotion> ... <\emotion>" line of the Emotion-Stimulus layout.
// Returns false for blank lines.
bool parse_es_line(const std::string& raw, const std::string& where,
                   std::string& label, TaggedLine& tagged) {
  const std::string line = trim(raw);
  if (line.empty()) return false;
  if (line[0] != '<')
    throw CorpusError(where + ": expected '<emotion>' tag at line start");
  const std::size_t close = line.find('>');
  if (close == std::string::npos)
    throw CorpusError(where + ": unterminated emotion tag");
  label = line.substr(1, close - 1);
  if (label.empty() || label[0] == '\\' || label[0] == '/')
    throw CorpusError(where + ": malformed emotion tag '" + label + "'");
  // Closing tag is <\emotion> in the source release; accept </emotion> too.
  std::string body = line.substr(close + 1);
  for (const std::string& suffix :
       {"<\\" + label + ">", "</" + label + ">"}) {
    if (body.size() >= suffix.size() &&
        body.compare(body.size() - suffix.size(), suffix.size(), suffix) == 0) {
      body = body.substr(0, body.size() - suffix.size());
      break;
    }
  }
  tagged = strip_cause_tags(body, where);
  return true;
}

void append_tagged_instance(Corpus& corpus, const std::string& id,
                            const std::string& label, const TaggedLine& tagged,
                            const std::string& where, bool multi_label = false) {
  AnnotatedInstance inst;
  inst.id = id;
  inst.raw_label = label;
  inst.label = label;
  inst.multi_label = multi_label;
  Tokenized tok = tokenize_whitespace(tagged.clean);
  if (tok.tokens.empty())
    throw CorpusError(where + ": empty text");
  inst.tokens = tok.tokens;
  std::vector<Span> spans;
  for (auto [cb, ce] : tagged.causes) {
    Span s;
    if (project_char_span(tok, cb, ce, s)) spans.push_back(s);
  }
  if (!spans.empty()) {
    merge_overlaps(spans);
    inst.roles[RoleKind::stimulus] = std::move(spans);
  }
  validate(inst);
  corpus.instances.push_back(std::move(inst));
}

void load_es_file(Corpus& corpus, const std::string& path,
                  const std::string& id_prefix) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    std::string label;
    TaggedLine tagged;
    if (!parse_es_line(line, where, label, tagged)) continue;
    append_tagged_instance(corpus, id_prefix + std::to_string(lineno), label,
                           tagged, where);
  }
}

Corpus load_es(const std::string& path, const AdapterOptions& options) {
  Corpus corpus;
  corpus.name = "es";
  if (fs::is_directory(path)) {
    const std::string cause =
        options.get("cause_file", (fs::path(path) / "Emotion Cause.txt").string());
    const std::string nocause =
        options.get("nocause_file", (fs::path(path) / "No Cause.txt").string());
    load_es_file(corpus, cause, "ec-");
    load_es_file(corpus, nocause, "nc-");
  } else {
    load_es_file(corpus, path, basename_stem(path) + "-");
  }
  refresh_label_set(corpus);
  validate(corpus);
  return corpus;
}

// ECA export: one instance per line, "label<TAB>text with <cause> markup".
// A pipe-joined label field marks a multi-label instance. Lines containing
// CJK text are skipped (English subset only).
Corpus load_eca(const std::string& path, const AdapterOptions&) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  Corpus corpus;
  corpus.name = "eca";
  std::string line;
  std::size_t lineno = 0;
  std::size_t skipped_cjk = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw CorpusError(where + ": missing or malformed field 'label' (expected label<TAB>text)");
    const std::string label_field = trim(line.substr(0, tab));
    const std::string text = line.substr(tab + 1);
    if (label_field.empty())
      throw CorpusError(where + ": missing or malformed field 'label'");
    if (contains_cjk(text)) {
      ++skipped_cjk;
      continue;
    }
    std::vector<std::string> labels = split_on(label_field, '|');
    TaggedLine tagged = strip_cause_tags(text, where);
    append_tagged_instance(corpus, "eca-" + std::to_string(lineno), labels[0],
                           tagged, where, labels.size() > 1);
  }
  if (skipped_cjk > 0)
    std::cerr << "eca: skipped " << skipped_cjk << " non-English instances\n";
  refresh_label_set(corpus);
  validate(corpus);
  return corpus;
}

// -------------------------------------------------------------------- GNE

// Returns annotations.<key>.gold if present, else the top-level key.
const nlohmann::json* gne_gold(const nlohmann::json& j, const std::string& key) {
  if (j.contains("annotations") && j["annotations"].is_object()) {
    const auto& ann = j["annotations"];
    if (ann.contains(key)) {
      const auto& entry = ann[key];
      if (entry.is_object() && entry.contains("gold")) return &entry["gold"];
      return &entry;
    }
  }
  if (j.contains(key)) return &j[key];
  return nullptr;
}

std::vector<std::string> gne_phrases(const nlohmann::json& gold) {
  std::vector<std::string> out;
  if (gold.is_string()) {
    out.push_back(gold.get<std::string>());
  } else if (gold.is_array()) {
    // Either a list of phrase strings or a list of token lists.
    bool all_strings = true;
    for (const auto& e : gold)
      if (!e.is_string()) all_strings = false;
    if (all_strings && !gold.empty() &&
        gold[0].get<std::string>().find(' ') == std::string::npos &&
        gold.size() > 1) {
      // Could be one phrase given as a token list; GNE gold spans are token
      // lists, so join them into a single phrase.
      std::string joined;
      for (const auto& e : gold) {
        if (!joined.empty()) joined += ' ';
        joined += e.get<std::string>();
      }
      out.push_back(joined);
    } else {
      for (const auto& e : gold) {
        if (e.is_string()) {
          out.push_back(e.get<std::string>());
        } else if (e.is_array()) {
          std::string joined;
          for (const auto& t : e) {
            if (!joined.empty()) joined += ' ';
            joined += t.get<std::string>();
          }
          out.push_back(joined);
        }
      }
    }
  }
  return out;
}

Corpus load_gne(const std::string& path, const AdapterOptions&) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  Corpus corpus;
  corpus.name = "gne";
  static const std::map<std::string, RoleKind> role_keys = {
      {"experiencer", RoleKind::experiencer},
      {"cue", RoleKind::cue},
      {"target", RoleKind::target},
      {"cause", RoleKind::stimulus},
      {"stimulus", RoleKind::stimulus}};
  std::string line;
  std::size_t lineno = 0;
  std::size_t unmatched_phrases = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(where + ": malformed JSON: " + e.what());
    }
    if (!j.contains("headline") || !j["headline"].is_string())
      throw CorpusError(where + ": missing or malformed field 'headline'");
    const std::string headline = j["headline"].get<std::string>();

    AnnotatedInstance inst;
    if (j.contains("id"))
      inst.id = j["id"].is_string() ? j["id"].get<std::string>()
                                    : std::to_string(j["id"].get<long>());
    else
      inst.id = "gne-" + std::to_string(lineno);

    const nlohmann::json* emo = gne_gold(j, "dominant_emotion");
    if (emo == nullptr)
      throw CorpusError(where + ": missing or malformed field 'dominant_emotion'");
    if (emo->is_string()) {
      inst.label = emo->get<std::string>();
    } else if (emo->is_array() && !emo->empty()) {
      inst.label = (*emo)[0].get<std::string>();
      std::set<std::string> distinct;
      for (const auto& e : *emo) distinct.insert(e.get<std::string>());
      inst.multi_label = distinct.size() > 1;
    } else {
      throw CorpusError(where + ": missing or malformed field 'dominant_emotion'");
    }
    inst.raw_label = inst.label;

    Tokenized tok = tokenize(headline);
    if (tok.tokens.empty())
      throw CorpusError(where + ": empty headline");
    inst.tokens = tok.tokens;

    for (const auto& [key, role] : role_keys) {
      const nlohmann::json* gold = gne_gold(j, key);
      if (gold == nullptr) continue;
      std::vector<Span> spans;
      std::size_t search_from = 0;
      for (const std::string& phrase : gne_phrases(*gold)) {
        const std::string p = trim(phrase);
        if (p.empty()) continue;
        std::size_t at = headline.find(p, search_from);
        if (at == std::string::npos) at = headline.find(p);
        if (at == std::string::npos) {
          ++unmatched_phrases;
          continue;
        }
        Span s;
        if (project_char_span(tok, at, at + p.size(), s)) spans.push_back(s);
        search_from = at + p.size();
      }
      if (!spans.empty()) {
        merge_overlaps(spans);
        auto& dst = inst.roles[role];
        dst.insert(dst.end(), spans.begin(), spans.end());
        merge_overlaps(dst);
      }
    }
    validate(inst);
    corpus.instances.push_back(std::move(inst));
  }
  if (unmatched_phrases > 0)
    std::cerr << "gne: " << unmatched_phrases
              << " annotated phrases not found in their headline\n";
  refresh_label_set(corpus);
  validate(corpus);
  return corpus;
}

// --------------------------------------------------------------------- ET

// Tab-separated export: id, text, label, experiencer, cue, target, stimulus.
// Role fields hold pipe-separated phrases; "AUTHOR" in the experiencer field
// records an author-experiencer without a text span. A comma-joined label
// field marks a multi-label instance.
Corpus load_et(const std::string& path, const AdapterOptions&) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  Corpus corpus;
  corpus.name = "et";
  std::string line;
  std::size_t lineno = 0;
  std::size_t unmatched_phrases = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line) {
      if (c == '\t') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    cols.push_back(cur);
    if (lineno == 1 && !cols.empty() && trim(cols[0]) == "id") continue;  // header
    if (cols.size() < 3)
      throw CorpusError(where + ": expected at least 3 tab-separated columns");
    cols.resize(7);

    AnnotatedInstance inst;
    inst.id = trim(cols[0]).empty() ? "et-" + std::to_string(lineno) : trim(cols[0]);
    const std::string text = cols[1];
    std::vector<std::string> labels = split_on(trim(cols[2]), ',');
    if (labels.empty())
      throw CorpusError(where + ": missing or malformed field 'label'");
    inst.label = trim(labels[0]);
    inst.raw_label = inst.label;
    inst.multi_label = labels.size() > 1;

    Tokenized tok = tokenize(text);
    if (tok.tokens.empty()) throw CorpusError(where + ": empty text");
    inst.tokens = tok.tokens;

    const RoleKind order[4] = {RoleKind::experiencer, RoleKind::cue,
                               RoleKind::target, RoleKind::stimulus};
    for (int c = 0; c < 4; ++c) {
      const std::string field = trim(cols[3 + c]);
      if (field.empty()) continue;
      if (order[c] == RoleKind::experiencer && field == "AUTHOR") {
        inst.roles[RoleKind::experiencer] = {};  // present, no span
        continue;
      }
      std::vector<Span> spans;
      for (const std::string& phrase : split_on(field, '|')) {
        const std::string p = trim(phrase);
        if (p.empty()) continue;
        const std::size_t at = text.find(p);
        if (at == std::string::npos) {
          ++unmatched_phrases;
          continue;
        }
        Span s;
        if (project_char_span(tok, at, at + p.size(), s)) spans.push_back(s);
      }
      if (!spans.empty()) {
        merge_overlaps(spans);
        inst.roles[order[c]] = std::move(spans);
      }
    }
    validate(inst);
    corpus.instances.push_back(std::move(inst));
  }
  if (unmatched_phrases > 0)
    std::cerr << "et: " << unmatched_phrases
              << " annotated phrases not found in their tweet\n";
  refresh_label_set(corpus);
  validate(corpus);
  return corpus;
}

// ------------------------------------------------------------------ REMAN

std::string xml_unescape(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      if (s.compare(i, 4, "&lt;") == 0) { out += '<'; i += 4; continue; }
      if (s.compare(i, 4, "&gt;") == 0) { out += '>'; i += 4; continue; }
      if (s.compare(i, 5, "&amp;") == 0) { out += '&'; i += 5; continue; }
      if (s.compare(i, 6, "&quot;") == 0) { out += '"'; i += 6; continue; }
      if (s.compare(i, 6, "&apos;") == 0) { out += '\''; i += 6; continue; }
    }
    out += s[i++];
  }
  return out;
}

std::map<std::string, std::string> parse_attributes(const std::string& tag) {
  std::map<std::string, std::string> attrs;
  std::size_t i = 0;
  while (i < tag.size()) {
    while (i < tag.size() && std::isspace(static_cast<unsigned char>(tag[i]))) ++i;
    std::size_t eq = tag.find('=', i);
    if (eq == std::string::npos) break;
    const std::string key = trim(tag.substr(i, eq - i));
    std::size_t q1 = tag.find('"', eq);
    if (q1 == std::string::npos) break;
    std::size_t q2 = tag.find('"', q1 + 1);
    if (q2 == std::string::npos) break;
    attrs[key] = xml_unescape(tag.substr(q1 + 1, q2 - q1 - 1));
    i = q2 + 1;
  }
  return attrs;
}

// Minimal scanner for the REMAN XML layout: <document> elements holding a
// <text> child, span elements with type/cbegin/cend attributes, and an
// optional <middle cbegin=".." cend=".."/> marker for the annotated segment
// of each sentence triple.
Corpus load_reman(const std::string& path, const AdapterOptions&) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string xml = buffer.str();

  Corpus corpus;
  corpus.name = "reman";
  static const std::set<std::string> ignored_types = {"character", "event",
                                                      "middle", "other"};
  std::size_t doc_no = 0;
  std::size_t pos = 0;
  while (true) {
    std::size_t doc_at = xml.find("<document", pos);
    if (doc_at == std::string::npos) break;
    std::size_t doc_tag_end = xml.find('>', doc_at);
    std::size_t doc_close = xml.find("</document>", doc_at);
    if (doc_tag_end == std::string::npos || doc_close == std::string::npos)
      throw CorpusError(path + ": unterminated <document> element");
    ++doc_no;
    const std::string where = path + ": document " + std::to_string(doc_no);
    auto doc_attrs =
        parse_attributes(xml.substr(doc_at + 9, doc_tag_end - doc_at - 9));
    const std::string body = xml.substr(doc_tag_end + 1, doc_close - doc_tag_end - 1);
    pos = doc_close + 11;

    std::size_t t1 = body.find("<text>");
    std::size_t t2 = body.find("</text>");
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw CorpusError(where + ": missing <text> element");
    const std::string text = xml_unescape(body.substr(t1 + 6, t2 - t1 - 6));

    // Collect annotated spans: self-closing elements with cbegin/cend.
    struct RawSpan {
      std::string type;
      std::size_t cbegin, cend;
    };
    std::vector<RawSpan> raw_spans;
    std::size_t middle_begin = 0, middle_end = text.size();
    std::size_t sp = 0;
    while (true) {
      std::size_t open = body.find('<', sp);
      if (open == std::string::npos) break;
      std::size_t close = body.find('>', open);
      if (close == std::string::npos) break;
      sp = close + 1;
      std::string tag = body.substr(open + 1, close - open - 1);
      if (tag.empty() || tag[0] == '/' ) continue;
      if (!tag.empty() && tag.back() == '/') tag.pop_back();
      std::istringstream tag_in(tag);
      std::string elem;
      tag_in >> elem;
      if (elem == "text" || elem == "document") continue;
      auto attrs = parse_attributes(tag.substr(elem.size()));
      if (!attrs.count("cbegin") || !attrs.count("cend")) continue;
      const std::size_t cb = std::stoul(attrs["cbegin"]);
      const std::size_t ce = std::stoul(attrs["cend"]);
      if (elem == "middle") {
        middle_begin = cb;
        middle_end = ce;
        continue;
      }
      std::string type = elem == "entity" || elem == "span"
                             ? attrs.count("type") ? attrs["type"] : ""
                             : elem;
      if (type.empty()) continue;
      raw_spans.push_back({type, cb, ce});
    }
    if (doc_attrs.count("mid_begin")) middle_begin = std::stoul(doc_attrs["mid_begin"]);
    if (doc_attrs.count("mid_end")) middle_end = std::stoul(doc_attrs["mid_end"]);
    if (middle_end > text.size()) middle_end = text.size();
    if (middle_begin >= middle_end)
      throw CorpusError(where + ": empty middle segment");

    // Keep only the middle segment of the triple and rebase the offsets.
    const std::string segment = text.substr(middle_begin, middle_end - middle_begin);
    Tokenized tok = tokenize(segment);
    if (tok.tokens.empty()) throw CorpusError(where + ": empty middle segment");

    AnnotatedInstance inst;
    inst.id = doc_attrs.count("id") ? doc_attrs["id"]
                                    : "reman-" + std::to_string(doc_no);
    inst.tokens = tok.tokens;
    std::vector<std::string> emotions;  // in document order
    for (const RawSpan& rs : raw_spans) {
      // Clip to the middle segment; annotations outside it are dropped.
      const std::size_t cb = std::max(rs.cbegin, middle_begin);
      const std::size_t ce = std::min(rs.cend, middle_end);
      if (cb >= ce) continue;
      Span span;
      if (!project_char_span(tok, cb - middle_begin, ce - middle_begin, span))
        continue;
      RoleKind role;
      if (rs.type == "experiencer") {
        role = RoleKind::experiencer;
      } else if (rs.type == "target") {
        role = RoleKind::target;
      } else if (rs.type == "cause" || rs.type == "stimulus") {
        role = RoleKind::stimulus;
      } else if (ignored_types.count(rs.type)) {
        continue;
      } else {
        // Emotion-typed span: the cue annotation, typed with its emotion.
        role = RoleKind::cue;
        if (std::find(emotions.begin(), emotions.end(), rs.type) ==
            emotions.end())
          emotions.push_back(rs.type);
      }
      inst.roles[role].push_back(span);
    }
    for (auto& [role, spans] : inst.roles) merge_overlaps(spans);
    inst.label = emotions.empty() ? "noemo" : emotions[0];
    inst.raw_label = inst.label;
    inst.multi_label = emotions.size() > 1;
    validate(inst);
    corpus.instances.push_back(std::move(inst));
  }
  refresh_label_set(corpus);
  validate(corpus);
  return corpus;
}

}  // namespace

Corpus load_corpus(const std::string& path, const std::string& adapter,
                   const AdapterOptions& options) {
  if (!fs::exists(path))
    throw CorpusError("no such file or directory: " + path);
  if (adapter == "canonical" || adapter == "canonical-jsonl")
    return load_canonical(path);
  if (adapter == "es") return load_es(path, options);
  if (adapter == "eca") return load_eca(path, options);
  if (adapter == "gne") return load_gne(path, options);
  if (adapter == "et") return load_et(path, options);
  if (adapter == "reman") return load_reman(path, options);
  throw ConfigError("unknown adapter: " + adapter);
}

}  // namespace rolemask
