#pragma once

// Detector wire protocol v1: one JSON object per line.
//
//   client -> {"type":"hello","version":1}
//   server -> {"type":"hello","version":1,"name":"..."}
//   client -> {"type":"detect","id":N,"height":L,"width":W,"pixels":"<base64 RGB row-major>"}
//   server -> {"type":"detections","id":N,"boxes":[{"cl":C,"x":..,"y":..,"l":..,"w":..}, ...]}
//   server -> {"type":"error","id":N|null,"message":"..."}
//
// cl = 0 encodes the no-object class. Unknown fields are ignored.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <sodium.h>

#include <json.hpp>

#include "butterfly/core/box.hpp"
#include "butterfly/core/image.hpp"

namespace butterfly::protocol {

inline constexpr int kVersion = 1;

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Hello {
    int version = kVersion;
    std::optional<std::string> name;
};

struct DetectRequest {
    std::uint64_t id = 0;
    Image image;
};

struct Detections {
    std::uint64_t id = 0;
    DetectionSet boxes;
};

struct ErrorRecord {
    std::optional<std::uint64_t> id;
    std::string message;
};

using Record = std::variant<Hello, DetectRequest, Detections, ErrorRecord>;

[[nodiscard]] inline auto base64_encode(std::span<const std::uint8_t> bytes) -> std::string
{
    auto const variant = sodium_base64_VARIANT_ORIGINAL;
    std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
    out.resize(out.size() - 1); // trailing NUL
    return out;
}

[[nodiscard]] inline auto base64_decode(std::string_view text) -> std::vector<std::uint8_t>
{
    std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
    std::size_t len = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                          sodium_base64_VARIANT_ORIGINAL) != 0
        || end != text.data() + text.size()) {
        throw ProtocolError("invalid base64 payload");
    }
    out.resize(len);
    return out;
}

namespace detail {
    using nlohmann::json;

    inline auto box_to_json(const BoundingBox& b) -> json
    {
        return json{{"cl", b.cl}, {"x", b.x}, {"y", b.y}, {"l", b.l}, {"w", b.w}};
    }

    template <class T>
    auto field(const json& j, const char* key) -> T
    {
        auto const it = j.find(key);
        if (it == j.end()) {
            throw ProtocolError(std::string("missing field '") + key + "'");
        }
        try {
            return it->get<T>();
        } catch (const json::exception&) {
            throw ProtocolError(std::string("bad type for field '") + key + "'");
        }
    }

    inline auto id_field(const json& j) -> std::uint64_t
    {
        auto const it = j.find("id");
        if (it == j.end() || !it->is_number_unsigned()) {
            if (it != j.end() && it->is_number_integer() && it->get<std::int64_t>() >= 0) {
                return it->get<std::uint64_t>();
            }
            throw ProtocolError("field 'id' must be an unsigned integer");
        }
        return it->get<std::uint64_t>();
    }
} // namespace detail

[[nodiscard]] inline auto encode(const Hello& h) -> std::string
{
    nlohmann::json j{{"type", "hello"}, {"version", h.version}};
    if (h.name) {
        j["name"] = *h.name;
    }
    return j.dump();
}

[[nodiscard]] inline auto encode(const DetectRequest& r) -> std::string
{
    return nlohmann::json{{"type", "detect"},
                          {"id", r.id},
                          {"height", r.image.height()},
                          {"width", r.image.width()},
                          {"pixels", base64_encode(r.image.data())}}
        .dump();
}

[[nodiscard]] inline auto encode(const Detections& d) -> std::string
{
    auto boxes = nlohmann::json::array();
    for (const auto& b : d.boxes) {
        boxes.push_back(detail::box_to_json(b));
    }
    return nlohmann::json{{"type", "detections"}, {"id", d.id}, {"boxes", std::move(boxes)}}.dump();
}

[[nodiscard]] inline auto encode(const ErrorRecord& e) -> std::string
{
    nlohmann::json j{{"type", "error"}, {"message", e.message}};
    j["id"] = e.id ? nlohmann::json(*e.id) : nlohmann::json(nullptr);
    return j.dump();
}

/// Parses one record. Throws ProtocolError on anything malformed.
[[nodiscard]] inline auto decode(std::string_view line) -> Record
{
    using nlohmann::json;
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("not JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ProtocolError("record is not a JSON object");
    }
    auto const type = detail::field<std::string>(j, "type");
    if (type == "hello") {
        Hello h{detail::field<int>(j, "version"), std::nullopt};
        if (auto it = j.find("name"); it != j.end() && it->is_string()) {
            h.name = it->get<std::string>();
        }
        return h;
    }
    if (type == "detect") {
        auto const id = detail::id_field(j);
        auto const height = detail::field<std::size_t>(j, "height");
        auto const width = detail::field<std::size_t>(j, "width");
        auto pixels = base64_decode(detail::field<std::string>(j, "pixels"));
        if (height == 0 || width == 0 || pixels.size() != height * width * kChannels) {
            throw ProtocolError("pixel payload does not match height x width x 3");
        }
        return DetectRequest{id, Image(Shape{height, width}, std::move(pixels))};
    }
    if (type == "detections") {
        Detections d{detail::id_field(j), {}};
        auto const it = j.find("boxes");
        if (it == j.end() || !it->is_array()) {
            throw ProtocolError("field 'boxes' must be an array");
        }
        for (const auto& b : *it) {
            if (!b.is_object()) {
                throw ProtocolError("box is not an object");
            }
            BoundingBox box{detail::field<int>(b, "cl"), detail::field<double>(b, "x"), detail::field<double>(b, "y"),
                            detail::field<double>(b, "l"), detail::field<double>(b, "w")};
            if (box.cl < 0 || !(box.l >= 0.0) || !(box.w >= 0.0)) {
                throw ProtocolError("box has a negative class or extent");
            }
            d.boxes.push_back(box);
        }
        return d;
    }
    if (type == "error") {
        ErrorRecord e;
        if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
            e.id = detail::id_field(j);
        }
        if (auto it = j.find("message"); it != j.end() && it->is_string()) {
            e.message = it->get<std::string>();
        }
        return e;
    }
    throw ProtocolError("unknown record type '" + type + "'");
}

} // namespace butterfly::protocol
