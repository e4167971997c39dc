#include "platoon/json_location.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "platoon/errors.hpp"

namespace platoon {
namespace {

// Minimal scanner over already-validated JSON text. It only needs to find
// where a value begins, so it skips values without building them.
class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  std::size_t locate(const std::vector<std::string>& tokens) {
    skip_ws();
    for (const auto& token : tokens) {
      if (pos_ >= text_.size()) return 0;
      if (text_[pos_] == '{') {
        if (!enter_object_member(token)) return 0;
      } else if (text_[pos_] == '[') {
        if (!enter_array_element(token)) return 0;
      } else {
        return 0;
      }
    }
    return line_;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
      advance();
    }
  }

  std::string read_string() {
    std::string out;
    advance();  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        advance();
      }
      out.push_back(text_[pos_]);
      advance();
    }
    if (pos_ < text_.size()) advance();
    return out;
  }

  void skip_value() {
    skip_ws();
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '"') {
      read_string();
    } else if (c == '{' || c == '[') {
      int depth = 0;
      while (pos_ < text_.size()) {
        const char d = text_[pos_];
        if (d == '"') {
          read_string();
          continue;
        }
        if (d == '{' || d == '[') ++depth;
        if (d == '}' || d == ']') {
          --depth;
          if (depth == 0) {
            advance();
            return;
          }
        }
        advance();
      }
    } else {
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
             text_[pos_] != ' ' && text_[pos_] != '\n' && text_[pos_] != '\t' && text_[pos_] != '\r') {
        advance();
      }
    }
  }

  bool enter_object_member(const std::string& key) {
    advance();  // {
    while (true) {
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] == '}') return false;
      if (text_[pos_] == ',') {
        advance();
        continue;
      }
      const std::string name = read_string();
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ':') advance();
      skip_ws();
      if (name == key) return true;
      skip_value();
    }
  }

  bool enter_array_element(const std::string& token) {
    std::size_t wanted = 0;
    try {
      wanted = std::stoul(token);
    } catch (const std::exception&) {
      return false;
    }
    advance();  // [
    for (std::size_t i = 0;; ++i) {
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] == ']') return false;
      if (i == wanted) return true;
      skip_value();
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ',') advance();
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::vector<std::string> split_pointer(const nlohmann::json::json_pointer& pointer) {
  std::vector<std::string> tokens;
  auto p = pointer;
  while (!p.empty()) {
    tokens.insert(tokens.begin(), p.back());
    p.pop_back();
  }
  return tokens;
}

}  // namespace

std::size_t json_line_of(std::string_view text, const nlohmann::json::json_pointer& pointer) {
  Scanner scanner(text);
  return scanner.locate(split_pointer(pointer));
}

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

nlohmann::json parse_json_document(std::string_view text, std::string_view source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the byte just past the offending token.
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    std::ostringstream msg;
    msg << source << ":" << line_of_byte(text, byte) << ": " << e.what();
    throw InputError(msg.str());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string located_message(std::string_view source, std::string_view text,
                            const nlohmann::json::json_pointer& pointer, std::string_view message) {
  std::ostringstream out;
  out << source << ":" << json_line_of(text, pointer) << ": " << message << " (at " << pointer.to_string()
      << ")";
  return out.str();
}

}  // namespace platoon
