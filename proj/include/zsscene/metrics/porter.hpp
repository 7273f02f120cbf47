#ifndef ZSSCENE_METRICS_PORTER_HPP
#define ZSSCENE_METRICS_PORTER_HPP

#include <array>
#include <string>
#include <string_view>
#include <utility>

namespace zsscene::metrics
{
  /// Porter (1980) suffix-stripping stemmer for lowercase ASCII words.
  /// Words of length <= 2 and words with non-letters are returned as is.
  class PorterStemmer
  {
  public:
    static std::string stem(std::string_view word)
    {
      if (word.size() <= 2)
        return std::string(word);
      for (char c : word)
        if (c < 'a' || c > 'z')
          return std::string(word);
      PorterStemmer s{std::string(word)};
      s.step1ab();
      s.step1c();
      s.step2();
      s.step3();
      s.step4();
      s.step5();
      return s.b_;
    }

  private:
    explicit PorterStemmer(std::string w) : b_(std::move(w)) {}

    std::string b_;
    std::size_t j_ = 0;  // end of the stem under test (exclusive)

    bool cons(std::size_t i) const
    {
      switch (b_[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u': return false;
        case 'y': return i == 0 || !cons(i - 1);
        default: return true;
      }
    }

    // Number of VC sequences in b_[0, j_).
    int measure() const
    {
      int n = 0;
      std::size_t i = 0;
      while (i < j_ && cons(i))
        ++i;
      while (i < j_) {
        while (i < j_ && !cons(i))
          ++i;
        if (i >= j_)
          break;
        while (i < j_ && cons(i))
          ++i;
        ++n;
      }
      return n;
    }

    bool vowel_in_stem() const
    {
      for (std::size_t i = 0; i < j_; ++i)
        if (!cons(i))
          return true;
      return false;
    }

    bool double_cons(std::size_t end) const
    {
      return end >= 2 && b_[end - 1] == b_[end - 2] && cons(end - 1);
    }

    // cvc at the end of b_[0, end), last consonant not w, x, y.
    bool cvc(std::size_t end) const
    {
      if (end < 3 || !cons(end - 1) || cons(end - 2) || !cons(end - 3))
        return false;
      const char c = b_[end - 1];
      return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view s)
    {
      if (s.size() > b_.size() || b_.compare(b_.size() - s.size(), s.size(), s) != 0)
        return false;
      j_ = b_.size() - s.size();
      return true;
    }

    void set_to(std::string_view s) { b_.replace(j_, b_.size() - j_, s); }

    void replace_if_measured(std::string_view s)
    {
      if (measure() > 0)
        set_to(s);
    }

    void step1ab()
    {
      if (b_.back() == 's') {
        if (ends("sses"))
          set_to("ss");
        else if (ends("ies"))
          set_to("i");
        else if (b_.size() >= 2 && b_[b_.size() - 2] != 's')
          b_.pop_back();
      }
      if (ends("eed")) {
        if (measure() > 0)
          b_.pop_back();
        return;
      }
      if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
        b_.resize(j_);
        if (ends("at"))
          set_to("ate");
        else if (ends("bl"))
          set_to("ble");
        else if (ends("iz"))
          set_to("ize");
        else if (double_cons(b_.size())) {
          const char c = b_.back();
          if (c != 'l' && c != 's' && c != 'z')
            b_.pop_back();
        } else {
          j_ = b_.size();
          if (measure() == 1 && cvc(b_.size()))
            b_ += 'e';
        }
      }
    }

    void step1c()
    {
      if (ends("y") && vowel_in_stem())
        b_.back() = 'i';
    }

    void step2()
    {
      static constexpr std::array<std::pair<std::string_view, std::string_view>, 20> rules{{
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"}, {"izer", "ize"},
        {"abli", "able"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"},
        {"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}, {"alism", "al"}, {"iveness", "ive"},
        {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"},
      }};
      apply_first(rules);
    }

    void step3()
    {
      static constexpr std::array<std::pair<std::string_view, std::string_view>, 7> rules{{
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""}, {"ness", ""},
      }};
      apply_first(rules);
    }

    template <std::size_t N>
    void apply_first(const std::array<std::pair<std::string_view, std::string_view>, N>& rules)
    {
      // Longest matching suffix wins; at most one rule fires.
      std::size_t best = N;
      for (std::size_t r = 0; r != N; ++r) {
        const auto& suf = rules[r].first;
        if (suf.size() <= b_.size() && b_.compare(b_.size() - suf.size(), suf.size(), suf) == 0
            && (best == N || suf.size() > rules[best].first.size()))
          best = r;
      }
      if (best == N)
        return;
      j_ = b_.size() - rules[best].first.size();
      replace_if_measured(rules[best].second);
    }

    void step4()
    {
      static constexpr std::array<std::string_view, 19> suffixes{
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
        "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize"};
      std::string_view best;
      for (auto s : suffixes)
        if (s.size() <= b_.size() && b_.compare(b_.size() - s.size(), s.size(), s) == 0 && s.size() > best.size())
          best = s;
      if (best.empty())
        return;
      j_ = b_.size() - best.size();
      if (best == "ion" && !(j_ > 0 && (b_[j_ - 1] == 's' || b_[j_ - 1] == 't')))
        return;
      if (measure() > 1)
        b_.resize(j_);
    }

    void step5()
    {
      j_ = b_.size() - 1;
      if (b_.back() == 'e') {
        const int m = measure();
        if (m > 1 || (m == 1 && !cvc(j_)))
          b_.pop_back();
      }
      j_ = b_.size();
      if (b_.back() == 'l' && double_cons(b_.size()) && measure() > 1)
        b_.pop_back();
    }
  };

  inline std::string porter_stem(std::string_view word) { return PorterStemmer::stem(word); }
}

#endif
