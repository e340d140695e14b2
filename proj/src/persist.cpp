#include "qmod/persist.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "qmod/constraints.hpp"

namespace qmod {
namespace {

Level derived_level(ElementKind kind, ElementId owner) {
  if (kind == ElementKind::RootFolder) return owner.is_null() ? Level::M2 : Level::M1;
  return is_meta_kind(kind) ? Level::M2 : Level::M1;
}

void put_list(std::ostringstream& os, const ValueList& values) {
  os << ' ' << values.size();
  for (const Value& v : values) os << ' ' << format_value(v);
}

void put_ids(std::ostringstream& os, const std::vector<ElementId>& ids) {
  os << ' ' << ids.size();
  for (ElementId id : ids) os << ' ' << id.value;
}

// Reads the tokens of one line, reporting errors against its line number.
class LineReader {
 public:
  LineReader(std::vector<Token> toks, std::size_t line) : toks_(std::move(toks)), line_(line) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Code::FORMAT_ERROR, {std::to_string(line_), why});
  }
  bool done() const { return pos_ == toks_.size(); }
  const Token& next(const char* what) {
    if (done()) fail(std::string("missing ") + what);
    return toks_[pos_++];
  }
  std::uint64_t number(const char* what) {
    const Token& t = next(what);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (t.quoted || ec != std::errc() || p != t.text.data() + t.text.size()) fail(std::string("bad ") + what);
    return v;
  }
  ElementId id(const char* what) { return ElementId(number(what)); }
  std::string string(const char* what) {
    const Token& t = next(what);
    if (!t.quoted) fail(std::string(what) + " must be quoted");
    return t.text;
  }
  Value value(std::optional<BaseType> type) {
    const Token& t = next("value");
    auto v = type ? parse_typed(t, *type) : parse_literal(t);
    if (!v) fail("bad value " + encode_token(t.text));
    return *v;
  }
  ValueList list(std::optional<BaseType> type, std::size_t limit = SIZE_MAX) {
    const std::uint64_t n = number("count");
    if (n > limit || n > toks_.size()) fail("count out of range");
    ValueList out;
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(value(type));
    return out;
  }
  std::vector<ElementId> ids() {
    const std::uint64_t n = number("count");
    if (n > toks_.size()) fail("count out of range");
    std::vector<ElementId> out;
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(id("id"));
    return out;
  }
  void end() const {
    if (!done()) fail("unexpected trailing tokens");
  }

 private:
  std::vector<Token> toks_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::optional<BaseType> column_base(ColumnType t) {
  switch (t) {
    case ColumnType::Bool: return BaseType::BOOL;
    case ColumnType::Int:
    case ColumnType::Ref: return BaseType::INT;
    case ColumnType::Real: return BaseType::REAL;
    case ColumnType::String: return BaseType::STRING;
    case ColumnType::Any:
    case ColumnType::ByDataType: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::string serialize(const Store& store) {
  std::ostringstream os;
  os << kFormatName << ' ' << kFormatVersion << ' ' << store.next_id() << '\n';
  std::map<ElementId, const Element*> all;
  for (std::size_t k = 0; k < kKindCount; ++k) {
    for (const auto& [id, e] : store.table(static_cast<ElementKind>(k))) all.emplace(id, &e);
  }
  std::size_t records = 0;
  auto ei = all.begin();
  auto ti = store.traces().begin();
  while (ei != all.end() || ti != store.traces().end()) {
    ++records;
    if (ti == store.traces().end() || (ei != all.end() && ei->first < ti->first)) {
      const Element& e = *ei->second;
      os << to_string(e.header.kind) << ' ' << e.header.id.value << ' ' << e.header.owner.value << ' '
         << quote(e.header.name);
      for (const ValueList& c : e.columns) put_list(os, c);
      if (e.header.kind == ElementKind::Instance) {
        os << ' ' << e.slots.size();
        for (const auto& [aid, values] : e.slots) {
          os << ' ' << aid.value;
          put_list(os, values);
        }
      }
      os << '\n';
      ++ei;
    } else {
      const Trace& t = ti->second;
      os << "Trace " << t.id.value << ' ' << t.transformation.value << ' ' << t.source_root.value << ' '
         << t.target_root.value << ' ' << t.records.size();
      for (const TraceRecord& r : t.records) {
        os << ' ' << r.seq << ' ' << r.rule.value;
        put_ids(os, r.sources);
        put_ids(os, r.targets);
        os << ' ' << quote(r.note);
      }
      os << '\n';
      ++ti;
    }
  }
  os << "END " << records << '\n';
  return os.str();
}

Store deserialize(std::string_view bytes, bool validate) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < bytes.size()) {
    std::size_t nl = bytes.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(bytes.substr(start));
      break;
    }
    lines.push_back(bytes.substr(start, nl - start));
    start = nl + 1;
  }
  auto reader = [&](std::size_t index) {
    try {
      return LineReader(tokenize(lines[index]), index + 1);
    } catch (const TokenizeError& e) {
      throw Error(Code::FORMAT_ERROR, {std::to_string(index + 1), e.reason});
    }
  };
  if (lines.empty()) throw Error(Code::FORMAT_ERROR, {"1", "empty file"});

  LineReader header = reader(0);
  const Token& magic = header.next("format name");
  if (magic.quoted || magic.text != kFormatName) header.fail("not a model file");
  const std::uint64_t version = header.number("version");
  if (version != kFormatVersion) throw Error(Code::VERSION_UNSUPPORTED, {std::to_string(version)});
  const std::uint64_t next_id = header.number("next id");
  header.end();

  Store store;
  store.clear_all();
  ElementId last;
  std::size_t records = 0;
  bool ended = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    LineReader r = reader(i);
    if (ended) r.fail("content after END");
    const Token& head = r.next("kind");
    if (head.quoted) r.fail("kind must be bare");
    if (head.text == "END") {
      if (r.number("record count") != records) r.fail("record count does not match");
      r.end();
      ended = true;
      continue;
    }
    ++records;
    const ElementId id = r.id("id");
    if (id.is_null() || id <= last || id.value >= next_id) r.fail("id out of order or range");
    last = id;
    if (head.text == "Trace") {
      Trace t;
      t.id = id;
      t.transformation = r.id("transformation");
      t.source_root = r.id("source");
      t.target_root = r.id("target");
      const std::uint64_t n = r.number("record count");
      for (std::uint64_t k = 0; k < n; ++k) {
        TraceRecord rec;
        rec.seq = r.number("seq");
        if (rec.seq != k + 1) r.fail("trace records must be numbered from 1");
        rec.rule = r.id("rule");
        rec.sources = r.ids();
        rec.targets = r.ids();
        rec.note = r.string("note");
        t.records.push_back(std::move(rec));
      }
      r.end();
      store.insert_trace_raw(std::move(t));
      continue;
    }
    auto kind = kind_from_string(head.text);
    if (!kind) r.fail("unknown kind " + encode_token(head.text));
    Element e;
    e.header.id = id;
    e.header.kind = *kind;
    e.header.owner = r.id("owner");
    e.header.name = r.string("name");
    e.header.level = derived_level(*kind, e.header.owner);
    for (const ColumnSpec& spec : schema(*kind)) {
      const auto limit = spec.upper == kUnbounded ? SIZE_MAX : static_cast<std::size_t>(spec.upper);
      e.columns.push_back(r.list(column_base(spec.type), limit));
    }
    if (*kind == ElementKind::Instance) {
      const std::uint64_t n = r.number("slot count");
      ElementId prev;
      for (std::uint64_t k = 0; k < n; ++k) {
        const ElementId aid = r.id("attribute");
        if (aid <= prev) r.fail("slots out of order");
        prev = aid;
        ValueList values = r.list(std::nullopt);
        if (values.empty()) r.fail("empty slot");
        e.slots.emplace(aid, std::move(values));
      }
    }
    r.end();
    store.insert_raw(std::move(e));
  }
  if (!ended) throw Error(Code::FORMAT_ERROR, {std::to_string(lines.size() + 1), "missing END record"});
  store.set_next_id(next_id);

  const std::array<std::pair<ElementId, ElementKind>, 4> fixed = {
      std::pair{reserved::kRoot, ElementKind::RootFolder}, std::pair{reserved::kM2Region, ElementKind::Namespace},
      std::pair{reserved::kM1Region, ElementKind::RootFolder}, std::pair{reserved::kDimensionless, ElementKind::Unit}};
  const Store fresh;
  for (auto [rid, rkind] : fixed) {
    const Element* e = store.find(rid);
    const Element& want = fresh.get(rid);
    if (!e || e->header.kind != rkind || e->header.owner != want.header.owner || e->header.name != want.header.name ||
        e->columns != want.columns)
      throw Error(Code::FORMAT_ERROR, {"2", "reserved element " + to_string(rid) + " is missing or altered"});
  }

  if (!validate) return store;
  if (auto v = evaluate(store); !v.empty()) throw Error(Code::VALIDATION_FAILED, {summarize(v)});
  return store;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 unavailable");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Code::IO_ERROR, {path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Code::IO_ERROR, {path.string()});
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Code::IO_ERROR, {path.string()});
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(Code::IO_ERROR, {path.string()});
}

std::string save_file(const Store& store, const std::filesystem::path& path) {
  const std::string bytes = serialize(store);
  write_text_file(path, bytes);
  return sha256_hex(bytes);
}

Store load_file(const std::filesystem::path& path, bool validate) {
  return deserialize(read_text_file(path), validate);
}

}  // namespace qmod
