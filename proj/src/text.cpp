#include "nflow/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>

namespace nflow::text {
namespace {

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

bool is_emoji(std::uint32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) ||  // pictographs, emoticons, flags, symbols
         (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
         (cp >= 0x2B00 && cp <= 0x2BFF) ||    // arrows, stars
         (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
         cp == 0x200D || cp == 0x20E3 ||      // ZWJ, keycap
         (cp >= 0xE0020 && cp <= 0xE007F);    // tag sequences
}

// Length of the UTF-8 sequence at s[i] and its code point; invalid bytes
// decode as themselves with length 1.
std::size_t decode(std::string_view s, std::size_t i, std::uint32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  if (b0 >= 0xF0) len = 4;
  else if (b0 >= 0xE0) len = 3;
  else if (b0 >= 0xC0) len = 2;
  if (i + len > s.size()) len = 1;
  if (len == 1) {
    cp = b0;
    return 1;
  }
  cp = b0 & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  return len;
}

bool starts_with_ci(std::string_view s, std::size_t i, std::string_view prefix) {
  if (i + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[i + k])) != prefix[k]) return false;
  }
  return true;
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

std::string join(const std::vector<std::string_view>& words, std::size_t limit) {
  std::string out;
  for (std::size_t k = 0; k < std::min(limit, words.size()); ++k) {
    if (k) out.push_back(' ');
    out.append(words[k]);
  }
  return out;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

// "running" -> "runn" -> "run"; l, s, z doublings are kept ("falling" -> "fall").
std::string undouble(std::string s) {
  const std::size_t n = s.size();
  if (n >= 2 && s[n - 1] == s[n - 2] && !is_vowel(s[n - 1]) && s[n - 1] != 'l' &&
      s[n - 1] != 's' && s[n - 1] != 'z') {
    s.pop_back();
  }
  return s;
}

}  // namespace

std::string clean(std::string_view a) {
  std::string out;
  out.reserve(a.size());
  std::size_t i = 0;
  while (i < a.size()) {
    const char c = a[i];
    if ((i == 0 || is_space(a[i - 1]) || a[i - 1] == '(') &&
        (starts_with_ci(a, i, "http://") || starts_with_ci(a, i, "https://") ||
         starts_with_ci(a, i, "www."))) {
      while (i < a.size() && !is_space(a[i])) ++i;
      continue;
    }
    if (c == '<' && i + 1 < a.size() &&
        (std::isalpha(static_cast<unsigned char>(a[i + 1])) || a[i + 1] == '/' || a[i + 1] == '!')) {
      const auto close = a.find('>', i + 1);
      if (close != std::string_view::npos) {
        out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    std::uint32_t cp = 0;
    const std::size_t len = decode(a, i, cp);
    if (!is_emoji(cp)) out.append(a.substr(i, len));
    i += len;
  }
  return out;
}

std::size_t word_count(std::string_view s) { return split_words(s).size(); }

std::vector<std::string> split_into_passages(std::string_view article, std::size_t max_words) {
  if (max_words == 0) max_words = 1;
  const std::string cleaned = clean(article);
  std::vector<std::string> passages;
  std::size_t start = 0;
  while (start <= cleaned.size()) {
    std::size_t stop = cleaned.find_first_of("\n\t", start);
    if (stop == std::string::npos) stop = cleaned.size();
    const std::string_view para = std::string_view(cleaned).substr(start, stop - start);

    // Sentences end at . ! ? followed by whitespace or the paragraph end.
    std::vector<std::vector<std::string_view>> sentences;
    std::size_t sb = 0;
    for (std::size_t i = 0; i < para.size(); ++i) {
      const char c = para[i];
      if ((c == '.' || c == '!' || c == '?') && (i + 1 == para.size() || is_space(para[i + 1]))) {
        auto words = split_words(para.substr(sb, i + 1 - sb));
        if (!words.empty()) sentences.push_back(std::move(words));
        sb = i + 1;
      }
    }
    if (sb < para.size()) {
      auto words = split_words(para.substr(sb));
      if (!words.empty()) sentences.push_back(std::move(words));
    }

    std::vector<std::string_view> current;
    auto flush = [&] {
      if (!current.empty()) passages.push_back(join(current, current.size()));
      current.clear();
    };
    for (const auto& s : sentences) {
      if (s.size() > max_words) {
        flush();
        passages.push_back(join(s, max_words));
        continue;
      }
      if (current.size() + s.size() > max_words) flush();
      current.insert(current.end(), s.begin(), s.end());
    }
    flush();
    if (stop == cleaned.size()) break;
    start = stop + 1;
  }
  return passages;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (auto w : split_words(s)) {
    std::size_t b = 0, e = w.size();
    auto keep_front = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '$'; };
    auto keep_back = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '%'; };
    while (b < e && !keep_front(w[b]) && static_cast<unsigned char>(w[b]) < 0x80) ++b;
    while (e > b && !keep_back(w[e - 1]) && static_cast<unsigned char>(w[e - 1]) < 0x80) --e;
    if (b == e) continue;
    std::string t(w.substr(b, e - b));
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t.size() > 2 && (t.ends_with("'s") || t.ends_with("\xE2\x80\x99s"))) {
      t.erase(t.size() - (t.ends_with("'s") ? 2 : 4));
    }
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string stem(std::string_view word) {
  std::string w(word);
  if (w.size() <= 3) return w;
  const bool alpha = std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isalpha(c); });
  if (!alpha) return w;

  if (w.ends_with("ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (w.ends_with("sses")) return w.substr(0, w.size() - 2);
  if (w.ends_with("es") && w.size() > 4) {
    const std::string base = w.substr(0, w.size() - 2);
    if (base.ends_with("s") || base.ends_with("x") || base.ends_with("z") ||
        base.ends_with("ch") || base.ends_with("sh")) {
      return base;
    }
  }
  if (w.ends_with("s") && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is")) {
    return w.substr(0, w.size() - 1);
  }
  if (w.ends_with("ing") && w.size() >= 6) {
    const std::string base = w.substr(0, w.size() - 3);
    if (has_vowel(base)) return undouble(base);
  }
  if (w.ends_with("ed") && w.size() >= 5 && !w.ends_with("eed")) {
    const std::string base = w.substr(0, w.size() - 2);
    if (has_vowel(base)) return undouble(base);
  }
  return w;
}

const std::unordered_set<std::string>& stopwords() {
  // Lexicon version 1; changing it changes keyword output.
  static const std::unordered_set<std::string> words{
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and",
      "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing", "down",
      "during", "each", "even", "few", "for", "from", "further", "had", "has", "have",
      "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i",
      "if", "in", "into", "is", "it", "its", "itself", "just", "like", "made", "make", "many",
      "may", "me", "more", "most", "much", "must", "my", "myself", "new", "no", "nor", "not",
      "now", "of", "off", "on", "once", "one", "only", "or", "other", "our", "ours",
      "ourselves", "out", "over", "own", "said", "same", "say", "says", "she", "should", "since",
      "so", "some", "still", "such", "than", "that", "the", "their", "theirs", "them",
      "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
      "two", "under", "until", "up", "us", "very", "was", "we", "were", "what", "when", "where",
      "which", "while", "who", "whom", "why", "will", "with", "would", "year", "years", "yet",
      "you", "your", "yours", "yourself", "yourselves", "according", "told", "week", "time",
      "people", "get", "go", "going", "way", "well", "back", "first", "last", "including",
      "around", "however", "another", "every", "where", "within", "without", "among"};
  return words;
}

const std::unordered_set<std::string>& first_names() {
  static const std::unordered_set<std::string> names{
      "james", "john", "robert", "michael", "william", "david", "richard", "joseph", "thomas",
      "charles", "christopher", "daniel", "matthew", "anthony", "mark", "donald", "steven",
      "paul", "andrew", "joshua", "kenneth", "kevin", "brian", "george", "timothy", "ronald",
      "edward", "jason", "jeffrey", "ryan", "jacob", "gary", "nicholas", "eric", "jonathan",
      "stephen", "larry", "justin", "scott", "brandon", "benjamin", "samuel", "gregory",
      "alexander", "frank", "patrick", "raymond", "jack", "dennis", "jerry", "tyler", "aaron",
      "jose", "adam", "nathan", "henry", "douglas", "zachary", "peter", "kyle", "ethan",
      "walter", "noah", "jeremy", "christian", "keith", "roger", "terry", "gerald", "harold",
      "sean", "austin", "carl", "arthur", "lawrence", "dylan", "jesse", "jordan", "bryan",
      "billy", "joe", "bruce", "gabriel", "logan", "albert", "willie", "alan", "juan", "wayne",
      "elijah", "randy", "roy", "vincent", "ralph", "eugene", "russell", "bobby", "mason",
      "philip", "louis", "mary", "patricia", "jennifer", "linda", "elizabeth", "barbara",
      "susan", "jessica", "sarah", "karen", "lisa", "nancy", "betty", "margaret", "sandra",
      "ashley", "kimberly", "emily", "donna", "michelle", "carol", "amanda", "dorothy",
      "melissa", "deborah", "stephanie", "rebecca", "sharon", "laura", "cynthia", "kathleen",
      "amy", "angela", "shirley", "anna", "brenda", "pamela", "emma", "nicole", "helen",
      "samantha", "katherine", "christine", "debra", "rachel", "carolyn", "janet", "catherine",
      "maria", "heather", "diane", "ruth", "julie", "olivia", "joyce", "virginia", "victoria",
      "kelly", "lauren", "christina", "joan", "evelyn", "judith", "megan", "andrea", "cheryl",
      "hannah", "jacqueline", "martha", "gloria", "teresa", "ann", "sara", "madison", "frances",
      "kathryn", "janice", "jean", "abigail", "alice", "judy", "sophia", "grace", "denise",
      "amber", "doris", "marilyn", "danielle", "beverly", "isabella", "theresa", "diana",
      "natalie", "brittany", "charlotte", "marie", "kayla", "alexis", "lori"};
  return names;
}

}  // namespace nflow::text
