#pragma once

// Small tokenizer for the plain-text input formats. Every error carries the
// byte offset of the offending token.

#include "gcgm/common.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

namespace gcgm {

class TextReader {
public:
    explicit TextReader(std::string text, std::string source = "input")
        : text_(std::move(text)), source_(std::move(source)) {}

    static TextReader open(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError("cannot open " + path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return TextReader(std::move(text), path);
    }

    std::int64_t offset(bool allow_newline = true) {
        skip_blanks(allow_newline);
        return static_cast<std::int64_t>(pos_);
    }

    /// Next whitespace/comma delimited token. Newlines are not crossed unless allow_newline.
    std::string_view token(bool allow_newline = true) {
        skip_blanks(allow_newline);
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != ',' && text_[pos_] != '\n') ++pos_;
        if (pos_ < text_.size() && text_[pos_] == ',') {
            std::string_view tok(text_.data() + start, pos_ - start);
            ++pos_;
            return tok;
        }
        return {text_.data() + start, pos_ - start};
    }

    std::string word() {
        const auto at = offset();
        auto tok = token();
        if (tok.empty()) fail("unexpected end of input", at);
        return std::string(tok);
    }

    std::int64_t integer() {
        const auto at = offset();
        auto tok = token();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size()) fail("expected an integer", at);
        return v;
    }

    /// A finite number on the current line.
    double real() {
        const auto at = offset(false);
        auto tok = token(false);
        if (tok.empty()) fail("expected a number", at);
        std::string s(tok);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            fail("expected a number", at);
        }
        if (used != s.size() || !std::isfinite(v)) fail("expected a finite number", at);
        return v;
    }

    /// Requires that only blanks remain before the next newline (or end of input).
    void end_of_line() {
        skip_blanks(false);
        if (pos_ < text_.size() && text_[pos_] != '\n') fail("unexpected extra value on line", static_cast<std::int64_t>(pos_));
        if (pos_ < text_.size()) ++pos_;
    }

    void expect_eof() {
        skip_blanks();
        if (pos_ != text_.size()) fail("trailing data", static_cast<std::int64_t>(pos_));
    }

    bool at_eof() {
        skip_blanks();
        return pos_ >= text_.size();
    }

    [[noreturn]] void fail(const std::string& what, std::int64_t at) const {
        throw FormatError(source_ + ": " + what, at);
    }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

    void skip_blanks(bool allow_newline = true) {
        while (pos_ < text_.size() && (is_space(text_[pos_]) || (allow_newline && text_[pos_] == '\n'))) ++pos_;
    }

    std::string text_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace gcgm
