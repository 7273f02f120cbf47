#ifndef ZSSCENE_TOKENIZE_HPP
#define ZSSCENE_TOKENIZE_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "zsscene/core/error.hpp"

namespace zsscene
{
  using Tokens = std::vector<std::string>;

  /// Lowercases ASCII letters, turns every ASCII character that is not a
  /// letter or digit into a separator, and splits. Bytes >= 0x80 are kept
  /// so UTF-8 words survive intact.
  inline Tokens tokenize(std::string_view text)
  {
    Tokens out;
    std::string cur;
    for (char ch : text) {
      const auto c = static_cast<unsigned char>(ch);
      if (c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z')) {
        cur.push_back(ch);
      } else if (c >= 'A' && c <= 'Z') {
        cur.push_back(static_cast<char>(c - 'A' + 'a'));
      } else if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty())
      out.push_back(std::move(cur));
    return out;
  }

  inline std::string join(const Tokens& tokens, std::string_view sep = " ")
  {
    std::string s;
    for (std::size_t i = 0; i != tokens.size(); ++i) {
      if (i)
        s += sep;
      s += tokens[i];
    }
    return s;
  }

  /// Token -> index map. Index 0 is reserved for out-of-vocabulary tokens;
  /// known tokens are numbered in sorted order from 1.
  class Vocabulary
  {
  public:
    static constexpr std::size_t kOov = 0;
    static constexpr std::string_view kOovToken = "<oov>";

    Vocabulary() : tokens_{std::string(kOovToken)} {}

    template <class Sequences>
    static Vocabulary build(const Sequences& sequences)
    {
      std::set<std::string> uniq;
      for (const auto& seq : sequences)
        for (const auto& tok : seq)
          uniq.insert(tok);
      return from_tokens(Tokens(uniq.begin(), uniq.end()));
    }

    /// Restores a vocabulary from its token list (without the OOV entry).
    static Vocabulary from_tokens(const Tokens& tokens)
    {
      Vocabulary v;
      for (const auto& t : tokens) {
        if (t == kOovToken)
          throw InvalidArgument("vocabulary: reserved token '<oov>' in token list");
        if (!v.index_.emplace(t, v.tokens_.size()).second)
          throw InvalidArgument("vocabulary: duplicate token '" + t + "'");
        v.tokens_.push_back(t);
      }
      return v;
    }

    std::size_t size() const noexcept { return tokens_.size(); }

    std::size_t lookup(const std::string& token) const
    {
      auto it = index_.find(token);
      return it == index_.end() ? kOov : it->second;
    }

    std::vector<std::size_t> lookup(const Tokens& tokens) const
    {
      std::vector<std::size_t> ids;
      ids.reserve(tokens.size());
      for (const auto& t : tokens)
        ids.push_back(lookup(t));
      return ids;
    }

    /// Known tokens in index order, OOV entry excluded.
    Tokens tokens() const { return Tokens(tokens_.begin() + 1, tokens_.end()); }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

  private:
    Tokens tokens_;
    std::map<std::string, std::size_t> index_;
  };
}

#endif
