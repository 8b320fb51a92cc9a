#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "vuldetect/data/dataset.hpp"

namespace vuldetect::data {

/// Generator for a toy C corpus. A function is vulnerable (label 1) exactly
/// when it calls strcpy, strcat, sprintf, gets or memcpy outside a size-check
/// guard `if (<len> < sizeof(<buf>)) { ... }`. Safe functions use the same
/// call inside such a guard, a bounded variant, or no copy at all. Some
/// vulnerable calls sit under an unrelated `if` to keep the guard condition
/// meaningful.
class SyntheticCorpus {
 public:
  explicit SyntheticCorpus(std::uint64_t seed) : rng_(seed) {}

  Dataset generate(std::size_t count, const std::string& name = "synthetic") {
    Dataset ds{name, {}};
    for (std::size_t i = 0; i < count; ++i) {
      const int label = static_cast<int>(i % 2);
      char id[32];
      std::snprintf(id, sizeof(id), "syn-%05zu", i);
      ds.samples.push_back({id, function(label), label, std::string("synthetic")});
    }
    return ds;
  }

 private:
  template <std::size_t N>
  const char* pick(const std::array<const char*, N>& options) {
    return options[uniform(N)];
  }
  std::size_t uniform(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  struct Names {
    std::string fn, buf, src, len, counter;
    int size;
  };

  Names names() {
    static constexpr std::array<const char*, 12> fns = {
        "copy_name", "load_user", "parse_header", "set_title", "read_line", "store_path",
        "handle_msg", "log_event", "build_key", "fill_record", "apply_label", "save_token"};
    static constexpr std::array<const char*, 8> bufs = {"buf", "dest", "line", "name",
                                                        "path", "tmp", "out", "field"};
    static constexpr std::array<const char*, 6> srcs = {"src", "input", "data", "str", "text", "arg"};
    static constexpr std::array<const char*, 4> lens = {"len", "n", "count", "size"};
    static constexpr std::array<const char*, 4> counters = {"i", "k", "total", "pos"};
    static constexpr std::array<int, 5> sizes = {16, 32, 64, 128, 256};
    return {pick(fns), pick(bufs), pick(srcs), pick(lens), pick(counters), sizes[uniform(5)]};
  }

  // The copy statement for a given dangerous function.
  static std::string raw_call(int kind, const Names& n) {
    switch (kind) {
      case 0: return "strcpy(" + n.buf + ", " + n.src + ");";
      case 1: return "strcat(" + n.buf + ", " + n.src + ");";
      case 2: return "sprintf(" + n.buf + ", \"%s\", " + n.src + ");";
      case 3: return "gets(" + n.buf + ");";
      default: return "memcpy(" + n.buf + ", " + n.src + ", " + n.len + ");";
    }
  }

  static std::string guard(int kind, const Names& n) {
    const std::string measured = kind == 4 ? n.len : "strlen(" + n.src + ")";
    return "if (" + measured + " < sizeof(" + n.buf + ")) {";
  }

  static std::string bounded_call(int kind, const Names& n) {
    switch (kind) {
      case 0: return "strncpy(" + n.buf + ", " + n.src + ", sizeof(" + n.buf + ") - 1);";
      case 1: return "strncat(" + n.buf + ", " + n.src + ", sizeof(" + n.buf + ") - 1);";
      case 2: return "snprintf(" + n.buf + ", sizeof(" + n.buf + "), \"%s\", " + n.src + ");";
      case 3: return "fgets(" + n.buf + ", sizeof(" + n.buf + "), stdin);";
      default: return "memcpy(" + n.buf + ", " + n.src + ", sizeof(" + n.buf + "));";
    }
  }

  std::string filler(const Names& n) {
    const std::string c = n.counter;
    switch (uniform(5)) {
      case 0: return c + "++;";
      case 1: return c + " = " + c + " + " + std::to_string(1 + uniform(9)) + ";";
      case 2: return "printf(\"%d\\n\", " + c + ");";
      case 3: return n.buf + "[0] = '\\0';";
      default: return "if (" + c + " > " + std::to_string(uniform(10)) + ") { " + c + " = 0; }";
    }
  }

  std::string function(int label) {
    const Names n = names();
    const int kind = static_cast<int>(uniform(5));
    std::vector<std::string> core;
    if (label == 1) {
      if (uniform(4) == 0) {
        // unrelated condition: still unchecked
        core = {"if (" + n.counter + " > " + std::to_string(uniform(10)) + ") {", raw_call(kind, n), "}"};
      } else {
        core = {raw_call(kind, n)};
      }
    } else {
      switch (uniform(5)) {
        case 0:
        case 1: core = {guard(kind, n), raw_call(kind, n), "}"}; break;
        case 2:
        case 3: core = {bounded_call(kind, n)}; break;
        default: core = {n.buf + "[0] = " + n.src + "[0];"}; break;
      }
    }

    std::string code = "int " + n.fn + "(const char *" + n.src + ", size_t " + n.len + ") {\n";
    code += "    char " + n.buf + "[" + std::to_string(n.size) + "];\n";
    code += "    int " + n.counter + " = 0;\n";
    const std::size_t before = uniform(3), after = uniform(2);
    for (std::size_t i = 0; i < before; ++i) code += "    " + filler(n) + "\n";
    for (std::size_t i = 0; i < core.size(); ++i) {
      const bool inner = core.size() == 3 && i == 1;
      code += (inner ? "        " : "    ") + core[i] + "\n";
    }
    for (std::size_t i = 0; i < after; ++i) code += "    " + filler(n) + "\n";
    code += "    return " + n.counter + ";\n}\n";
    return code;
  }

  std::mt19937_64 rng_;
};

/// The bundled corpus: 2,000 functions, balanced, seed 2024.
inline Dataset synthetic_corpus(std::size_t count = 2000, std::uint64_t seed = 2024) {
  return SyntheticCorpus(seed).generate(count);
}

}  // namespace vuldetect::data
