#pragma once

// Minimal protocol server used by the detector tests.

#include <chrono>
#include <numeric>
#include <string>
#include <variant>

#include "butterfly/detectors/external.hpp"
#include "butterfly/detectors/protocol.hpp"

namespace fixture {

enum class Mode {
    echo,          // canned boxes plus one box describing the received image
    bad_id,        // replies with the wrong id
    garbage,       // replies with a line that is not JSON
    version,       // announces protocol version 2
    silent,        // never answers detect requests
    remote_error,  // answers detect requests with an error record
    flaky,         // echoes the first kFlakyBudget detect requests, then errors
};

inline constexpr int kFlakyBudget = 20;

inline auto parse_mode(const std::string& name) -> Mode
{
    if (name == "bad-id") {
        return Mode::bad_id;
    }
    if (name == "garbage") {
        return Mode::garbage;
    }
    if (name == "version") {
        return Mode::version;
    }
    if (name == "silent") {
        return Mode::silent;
    }
    if (name == "remote-error") {
        return Mode::remote_error;
    }
    if (name == "flaky") {
        return Mode::flaky;
    }
    return Mode::echo;
}

inline auto canned_boxes() -> butterfly::DetectionSet
{
    return {{1, 2.5, 3.25, 4, 5}, {butterfly::kNoObject, 0, 0, 0, 0}, {3, 10.125, 7, 1, 2}};
}

/// Box that encodes what the server received: x = byte sum, y = pixel count.
inline auto image_digest(const butterfly::Image& img) -> butterfly::BoundingBox
{
    auto const data = img.data();
    auto const sum = std::accumulate(data.begin(), data.end(), 0.0);
    return {2, sum, static_cast<double>(img.height() * img.width()), 1, 1};
}

/// Serves one connection until the peer closes it.
inline void serve(butterfly::LineChannel& channel, Mode mode)
{
    namespace proto = butterfly::protocol;
    using namespace std::chrono_literals;
    int answered = 0;
    for (;;) {
        std::string line;
        try {
            line = channel.receive_line(600s);
        } catch (const butterfly::DetectorError&) {
            return;
        }
        proto::Record record;
        try {
            record = proto::decode(line);
        } catch (const proto::ProtocolError& e) {
            channel.send_line(proto::encode(proto::ErrorRecord{std::nullopt, e.what()}));
            continue;
        }
        if (std::holds_alternative<proto::Hello>(record)) {
            channel.send_line(proto::encode(proto::Hello{mode == Mode::version ? 2 : proto::kVersion, "fixture"}));
            continue;
        }
        const auto* request = std::get_if<proto::DetectRequest>(&record);
        if (request == nullptr) {
            channel.send_line(proto::encode(proto::ErrorRecord{std::nullopt, "unexpected record"}));
            continue;
        }
        auto effective = mode;
        if (mode == Mode::flaky) {
            effective = answered++ < kFlakyBudget ? Mode::echo : Mode::remote_error;
        }
        switch (effective) {
        case Mode::silent:
            break;
        case Mode::garbage:
            channel.send_line("{not json");
            break;
        case Mode::remote_error:
            channel.send_line(proto::encode(proto::ErrorRecord{request->id, "model failed"}));
            break;
        case Mode::bad_id:
            channel.send_line(proto::encode(proto::Detections{request->id + 1000, canned_boxes()}));
            break;
        case Mode::echo:
        case Mode::flaky:
        case Mode::version: {
            auto boxes = canned_boxes();
            boxes.push_back(image_digest(request->image));
            channel.send_line(proto::encode(proto::Detections{request->id, boxes}));
            break;
        }
        }
    }
}

} // namespace fixture
