// Serves an in-process fixture over NANPROP/1 on stdin/stdout.
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nanprop/errors.hpp"
#include "nanprop/fixtures.hpp"
#include "nanprop/wire.hpp"

namespace {

bool write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t w = ::write(STDOUT_FILENO, data.data() + off, data.size() - off);
        if (w < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(w);
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NANPROP/1 fixture server"};
    std::string name;
    bool hex = false, persistent = false, fail_exit = false;
    app.add_option("fixture", name, "fixture name")->required();
    app.add_flag("--hex", hex, "hex text framing");
    app.add_flag("--persistent", persistent, "answer requests until end of input");
    app.add_flag("--fail-exit", fail_exit, "exit with status 3 instead of answering a domain error");
    CLI11_PARSE(app, argc, argv);

    const nanprop::Fixture* fx = nanprop::find_fixture(name);
    if (!fx) {
        std::cerr << "unknown fixture '" << name << "'\n";
        return 1;
    }
    const auto format = hex ? nanprop::wire::Format::Hex : nanprop::wire::Format::Binary;

    std::string buffer;
    char chunk[65536];
    bool eof = false;
    while (true) {
        std::size_t consumed = 0;
        std::optional<std::vector<double>> request;
        try {
            request = nanprop::wire::try_parse_request(buffer, format, consumed);
        } catch (const nanprop::WireError& e) {
            std::cerr << "bad request: " << e.what() << '\n';
            return 1;
        }
        if (!request) {
            if (eof) {
                if (!buffer.empty()) std::cerr << "truncated request\n";
                return buffer.empty() ? 0 : 1;
            }
            const ssize_t r = ::read(STDIN_FILENO, chunk, sizeof chunk);
            if (r < 0 && errno == EINTR) continue;
            if (r <= 0) {
                eof = true;
            } else {
                buffer.append(chunk, static_cast<std::size_t>(r));
            }
            continue;
        }
        buffer.erase(0, consumed);

        std::string reply;
        if (request->size() != fx->n_inputs()) {
            std::cerr << "expected " << fx->n_inputs() << " inputs, got " << request->size() << '\n';
            return 1;
        }
        try {
            const auto y = fx->function(*request);
            reply = nanprop::wire::encode_response(nanprop::wire::Status::Ok, y, format);
        } catch (const std::exception& e) {
            if (fail_exit) {
                std::cerr << e.what() << '\n';
                return 3;
            }
            reply = nanprop::wire::encode_response(nanprop::wire::Status::DomainError, {}, format);
        }
        if (!write_all(reply)) return 1;
        if (!persistent) return 0;
    }
}
