#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vuldetect/codeprep/pipeline.hpp"

using namespace vuldetect;
using namespace vuldetect::codeprep;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(VULDETECT_FIXTURE_DIR) + "/codeprep/" + name, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + name);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::vector<std::string> kSourceFixtures = {"strip_input.c", "literals_input.c",
                                                  "normalize_input.c", "slices_input.c",
                                                  "lex_input.c"};

bool valid_sequence(const TokenSequence& seq, std::size_t max_len) {
  if (seq.ids.size() != max_len || seq.ids[0] != kClsId) return false;
  if (seq.true_length < 1 || seq.true_length > max_len) return false;
  for (std::size_t i = 0; i < max_len; ++i) {
    const bool pad = seq.ids[i] == kPadId;
    if (pad != (i >= seq.true_length)) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- comments

TEST(StripComments, LineComment) { EXPECT_EQ(strip_comments("int x; // counter"), "int x; "); }

TEST(StripComments, LiteralProtection) {
  const std::string code = R"(char* s = "//not a comment";)";
  EXPECT_EQ(strip_comments(code), code);
}

TEST(StripComments, MixedFixtureMatchesGolden) {
  EXPECT_EQ(strip_comments(fixture("strip_input.c")), fixture("strip_expected.c"));
}

TEST(StripComments, LiteralFixtureMatchesGolden) {
  EXPECT_EQ(strip_comments(fixture("literals_input.c")), fixture("literals_expected.c"));
}

TEST(StripComments, BlockCommentKeepsLineCount) {
  const std::string code = "a;/* x\ny\nz */b;\nc;";
  const std::string out = strip_comments(code);
  EXPECT_EQ(out, "a; \n\nb;\nc;");
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), std::count(code.begin(), code.end(), '\n'));
}

TEST(StripComments, UnterminatedBlockReportsLine) {
  try {
    strip_comments("int a;\nint b; /* open\nnever closed");
    FAIL() << "expected PreprocessError";
  } catch (const PreprocessError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(StripComments, IdempotentOnFixtures) {
  for (const auto& name : kSourceFixtures) {
    const std::string once = strip_comments(fixture(name));
    EXPECT_EQ(strip_comments(once), once) << name;
  }
}

// ---------------------------------------------------------------- lexer

TEST(Lexer, CompoundAssignment) {
  const auto tokens = lex("a+=1;");
  ASSERT_EQ(tokens.size(), 4u);
  EXPECT_EQ(tokens[0], (LexToken{TokenKind::identifier, "a", 1, 0}));
  EXPECT_EQ(tokens[1], (LexToken{TokenKind::op, "+=", 1, 1}));
  EXPECT_EQ(tokens[2], (LexToken{TokenKind::number_literal, "1", 1, 3}));
  EXPECT_EQ(tokens[3], (LexToken{TokenKind::punctuation, ";", 1, 4}));
}

TEST(Lexer, LongestMatch) {
  const auto tokens = lex("x >>= 2");
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[1].text, ">>=");
  EXPECT_EQ(lex("p->q").at(1).text, "->");
  EXPECT_EQ(lex("a...b").at(1).text, "...");
}

TEST(Lexer, NumericLiteralsAreSingleTokens) {
  for (const char* number : {"42", "0x1Fu", "3.14", "1.5e-3", ".25", "10UL", "2.0f", "1'000"}) {
    const auto tokens = lex(number);
    ASSERT_EQ(tokens.size(), 1u) << number;
    EXPECT_EQ(tokens[0].kind, TokenKind::number_literal) << number;
    EXPECT_EQ(tokens[0].text, number);
  }
}

TEST(Lexer, LiteralsAndKeywords) {
  const auto tokens = lex(R"(if (c == '\'') return L"w\"x";)");
  ASSERT_EQ(tokens.size(), 9u);
  EXPECT_EQ(tokens[0].kind, TokenKind::keyword);
  EXPECT_EQ(tokens[4], (LexToken{TokenKind::char_literal, R"('\'')", 1, 9}));
  EXPECT_EQ(tokens[7].kind, TokenKind::string_literal);
  EXPECT_EQ(tokens[7].text, R"(L"w\"x")");
}

TEST(Lexer, FixtureMatchesHandListing) {
  const auto tokens = lex(fixture("lex_input.c"));
  std::istringstream golden(fixture("lex_expected.tsv"));
  std::string row;
  std::size_t i = 0;
  while (std::getline(golden, row)) {
    ASSERT_LT(i, tokens.size());
    std::istringstream fields(row);
    std::string line, kind, text;
    std::getline(fields, line, '\t');
    std::getline(fields, kind, '\t');
    std::getline(fields, text);
    EXPECT_EQ(std::to_string(tokens[i].line), line) << "token " << i;
    EXPECT_EQ(to_string(tokens[i].kind), kind) << "token " << i << " '" << text << "'";
    EXPECT_EQ(tokens[i].text, text) << "token " << i;
    ++i;
  }
  EXPECT_EQ(i, tokens.size());
}

TEST(Lexer, UnlexableByteReportsOffset) {
  try {
    lex("int a = 1;\nint b @ 2;");
    FAIL() << "expected PreprocessError";
  } catch (const PreprocessError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 17"), std::string::npos) << e.what();
  }
  EXPECT_THROW(lex("\"open"), PreprocessError);
}

TEST(Lexer, JavaKeywordTable) {
  EXPECT_EQ(lex("final x", Language::java)[0].kind, TokenKind::keyword);
  EXPECT_EQ(lex("final x", Language::c_cpp)[0].kind, TokenKind::identifier);
  EXPECT_EQ(lex("a >>>= 1", Language::java)[1].text, ">>>=");
}

// ---------------------------------------------------------------- normalize

TEST(Normalize, CollapsesWhitespace) {
  EXPECT_EQ(normalize("int   a;\n\n\nint b;"), "int a; int b;");
}

TEST(Normalize, RenamesSingleIdentifier) {
  EXPECT_EQ(normalize("int count; count++;", {.rename_identifiers = true}), "int VAR1; VAR1++;");
}

TEST(Normalize, TwoFunctionsShareGlobalMap) {
  const std::string expected = fixture("normalize_expected.txt");
  const std::string got =
      normalize(strip_comments(fixture("normalize_input.c")), {.rename_identifiers = true});
  EXPECT_EQ(got + "\n", expected);
}

TEST(Normalize, KeepsLiteralsAndKnownApi) {
  const ApiList api = {"strcpy"};
  EXPECT_EQ(normalize("strcpy(dst,  \"a  b\");", {.rename_identifiers = true, .known_api = &api}),
            "strcpy(VAR1, \"a  b\");");
}

TEST(Normalize, DropsDirectives) {
  EXPECT_EQ(normalize("#define X \\\n  1\n#include <a.h>\nint y;\n  # pragma once\n"), "int y;");
}

TEST(Normalize, IdempotentOnFixtures) {
  for (bool rename : {false, true}) {
    for (const auto& name : kSourceFixtures) {
      const std::string once =
          normalize(strip_comments(fixture(name)), {.rename_identifiers = rename});
      EXPECT_EQ(normalize(once, {.rename_identifiers = rename}), once) << name;
    }
  }
}

TEST(Normalize, UnlexableInputIsError) {
  EXPECT_THROW(normalize("int a = `b`;"), PreprocessError);
}

// ---------------------------------------------------------------- slices

TEST(Slices, ApiCall) {
  const auto slices = extract_slices("strcpy(buf, src);", {"strcpy"});
  ASSERT_EQ(slices.size(), 1u);
  EXPECT_EQ(slices[0].kind, SliceKind::api_call);
  EXPECT_EQ(slices[0].anchor_line, 1u);
  EXPECT_EQ(slices[0].text, "strcpy(buf, src);");
}

TEST(Slices, NoAnchors) { EXPECT_TRUE(extract_slices("int x = 5;", {}).empty()); }

TEST(Slices, FixtureMatchesHandEnumeratedSet) {
  const std::string code = fixture("slices_input.c");
  const auto slices = extract_slices(code, default_api_list(), 3);
  std::vector<std::pair<std::size_t, std::string>> got;
  for (const auto& s : slices) got.emplace_back(s.anchor_line, std::string(to_string(s.kind)));

  std::vector<std::pair<std::size_t, std::string>> expected;
  std::istringstream golden(fixture("slices_expected.txt"));
  std::string row;
  while (std::getline(golden, row)) {
    if (row.empty() || row[0] == '#') continue;
    std::istringstream fields(row);
    std::size_t line;
    std::string kind;
    fields >> line >> kind;
    expected.emplace_back(line, kind);
  }
  EXPECT_EQ(got, expected);

  std::set<SliceKind> kinds;
  for (const auto& s : slices) {
    kinds.insert(s.kind);
    EXPECT_NE(s.text.find(s.anchor), std::string::npos);
  }
  EXPECT_EQ(kinds.size(), 4u);
}

TEST(Slices, ContextWindowIsClamped) {
  const std::string code = "a;\nb;\nstrcpy(x, y);\nc;\nd;\ne;";
  const auto slices = extract_slices(code, {"strcpy"}, 1);
  ASSERT_EQ(slices.size(), 1u);
  EXPECT_EQ(slices[0].text, "b;\nstrcpy(x, y);\nc;");
  EXPECT_EQ(extract_slices(code, {"strcpy"}, 10)[0].text, code);
}

TEST(Slices, DuplicatesOnSameLineEmittedOnce) {
  const auto slices = extract_slices("x = a[1] + b[2] + c[3];", {});
  ASSERT_EQ(slices.size(), 2u);
  EXPECT_EQ(slices[0].kind, SliceKind::array_usage);
  EXPECT_EQ(slices[1].kind, SliceKind::arithmetic_expression);
}

TEST(Slices, OnlyFourKindsOnAnyFixture) {
  for (const auto& name : kSourceFixtures) {
    const std::string code = drop_directives(strip_comments(fixture(name)));
    for (const auto& s : extract_slices(code, default_api_list())) {
      const auto k = static_cast<int>(s.kind);
      EXPECT_TRUE(k >= 0 && k <= 3);
      EXPECT_NE(to_string(s.kind), "?");
    }
  }
}

// ---------------------------------------------------------------- vocab

TEST(Vocab, FrequencyRanking) {
  const std::vector<std::vector<std::string>> corpus = {{"a", "a", "b"}};
  const Vocabulary v = build_vocab(corpus, 10, 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<unk>", "<cls>", "a", "b"}));
  EXPECT_EQ(build_vocab(corpus, 10, 2).entries(), (std::vector<std::string>{"a"}));
}

TEST(Vocab, MatchesSortOracle) {
  std::mt19937_64 rng(29);
  std::vector<std::vector<std::string>> corpus(10);
  for (int i = 0; i < 1000; ++i) {
    // skewed draw so counts vary
    const auto k = static_cast<int>(std::sqrt(static_cast<double>(rng() % 2500)));
    corpus[i % 10].push_back("t" + std::to_string(k));
  }
  std::map<std::string, int> counts;
  for (const auto& s : corpus)
    for (const auto& t : s) ++counts[t];
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [t, c] : counts) order.emplace_back(-c, t);
  std::sort(order.begin(), order.end());

  const std::size_t max_size = 30;
  const Vocabulary v = build_vocab(corpus, max_size, 1);
  ASSERT_EQ(v.size(), max_size);
  for (std::size_t i = 0; i + kReservedCount < max_size; ++i) {
    EXPECT_EQ(v.token(static_cast<TokenId>(i + kReservedCount)), order[i].second);
  }
}

TEST(Vocab, ErrorsAndDeterminism) {
  EXPECT_THROW(build_vocab(std::vector<std::vector<std::string>>{}, 10, 1), PreprocessError);
  EXPECT_THROW(build_vocab(std::vector<std::vector<std::string>>{{}}, 10, 1), PreprocessError);
  const std::vector<std::vector<std::string>> corpus = {{"x", "y", "y", "z"}};
  EXPECT_THROW(build_vocab(corpus, 3, 1), ConfigError);
  EXPECT_EQ(vocab_to_jsonl(build_vocab(corpus, 8, 1)), vocab_to_jsonl(build_vocab(corpus, 8, 1)));
}

TEST(Vocab, JsonLinesRoundTrip) {
  const Vocabulary v({"int", "\"quoted\"", "x"});
  const std::string text = vocab_to_jsonl(v);
  EXPECT_EQ(text.substr(0, text.find('\n')), R"({"id":0,"token":"<pad>"})");
  const Vocabulary back = vocab_from_jsonl(text);
  EXPECT_EQ(back, v);
  EXPECT_EQ(vocab_to_jsonl(back), text);
  EXPECT_THROW(vocab_from_jsonl(R"({"id":1,"token":"<unk>"})"), PreprocessError);
}

// ---------------------------------------------------------------- encode

TEST(Encode, EmptyInput) {
  const auto seq = encode(std::vector<std::string>{}, Vocabulary(), 5);
  EXPECT_EQ(seq.ids, (std::vector<TokenId>{kClsId, kPadId, kPadId, kPadId, kPadId}));
  EXPECT_EQ(seq.true_length, 1u);
}

TEST(Encode, UnknownTokenMapsToUnk) {
  const Vocabulary v({"int"});
  const auto seq = encode(std::vector<std::string>{"int", "mystery"}, v, 4);
  EXPECT_EQ(seq.ids, (std::vector<TokenId>{kClsId, 3, kUnkId, kPadId}));
}

TEST(Encode, TruncatesAgainstMappingOracle) {
  std::vector<std::string> tokens;
  for (int i = 0; i < 600; ++i) tokens.push_back("w" + std::to_string(i % 37));
  std::vector<std::string> known;
  for (int i = 0; i < 30; ++i) known.push_back("w" + std::to_string(i));
  const Vocabulary v(known);
  const auto seq = encode(tokens, v, 256);
  ASSERT_EQ(seq.ids.size(), 256u);
  EXPECT_EQ(seq.true_length, 256u);
  for (std::size_t i = 1; i < 256; ++i) {
    const int k = static_cast<int>((i - 1) % 37);
    const TokenId expected = k < 30 ? static_cast<TokenId>(k + 3) : kUnkId;
    EXPECT_EQ(seq.ids[i], expected) << i;
  }
}

TEST(Encode, DecodeRecoversTokensUpToUnkAndTruncation) {
  const std::vector<std::string> tokens = {"a", "b", "zz", "a", "c"};
  const Vocabulary v({"a", "b", "c"});
  const auto seq = encode(tokens, v, 5);
  EXPECT_EQ(decode(seq, v), (std::vector<std::string>{"a", "b", "<unk>", "a"}));
}

TEST(Encode, RejectsTinyMaxLen) {
  EXPECT_THROW(encode(std::vector<std::string>{}, Vocabulary(), 1), ConfigError);
}

TEST(ModelTokens, MasksLiterals) {
  EXPECT_EQ(model_tokens(R"(puts("hi"); c = 'x';)"),
            (std::vector<std::string>{"puts", "(", "STRLIT", ")", ";", "c", "=", "CHARLIT", ";"}));
}

// ---------------------------------------------------------------- pipeline

TEST(Pipeline, EveryFixtureYieldsValidSequences) {
  std::vector<std::vector<std::string>> corpus;
  std::vector<RawSample> processed;
  for (Unit unit : {Unit::function, Unit::slice}) {
    for (const auto& name : kSourceFixtures) {
      PreprocessOptions opts;
      opts.unit = unit;
      opts.rename_identifiers = true;
      for (auto& s : preprocess_sample({name, fixture(name), 1, {}}, opts, default_api_list())) {
        corpus.push_back(model_tokens(s.code));
        processed.push_back(std::move(s));
      }
    }
  }
  const Vocabulary v = build_vocab(corpus, 200, 1);
  for (const auto& s : processed) {
    for (std::size_t max_len : {2u, 16u, 256u}) {
      EXPECT_TRUE(valid_sequence(encode_code(s.code, v, max_len, s.label), max_len)) << s.id;
    }
  }
}

TEST(Pipeline, SliceUnitSplitsSamples) {
  PreprocessOptions opts;
  opts.unit = Unit::slice;
  opts.context = 0;
  const RawSample sample{"f1", "void f(char *d) {\n  strcpy(d, \"x\");\n}\n", 1, "unit"};
  const auto out = preprocess_sample(sample, opts, default_api_list());
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].id, "f1/pointer_usage@1");
  EXPECT_EQ(out[1].id, "f1/api_call@2");
  EXPECT_EQ(out[1].code, "strcpy(d, \"x\");");
  EXPECT_EQ(out[1].label, 1);
  EXPECT_EQ(out[1].origin, "unit");
}

TEST(Pipeline, ApiListFileFormat) {
  const ApiList api = parse_api_list("# dangerous\nstrcpy\n  gets  # legacy\n\nmemcpy\r\n");
  EXPECT_EQ(api, (ApiList{"gets", "memcpy", "strcpy"}));
  EXPECT_GE(default_api_list().size(), 55u);
}
