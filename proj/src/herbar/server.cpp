#include "herbar/service.hpp"

#include "herbar/error.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <thread>

namespace herbar {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

void serve_websocket(const Engine& engine, tcp::socket socket, const http::request<http::string_body>& req) {
  websocket::stream<tcp::socket> ws(std::move(socket));
  ws.accept(req);
  ws.text(true);
  Session session(engine);
  for (;;) {
    beast::flat_buffer buffer;
    ws.read(buffer);
    const std::string reply = session.handle_text(beast::buffers_to_string(buffer.data()));
    ws.write(net::buffer(reply));
  }
}

void serve_connection(std::shared_ptr<const Engine> engine, tcp::socket socket) {
  try {
    beast::flat_buffer buffer;
    for (;;) {
      http::request<http::string_body> req;
      http::read(socket, buffer, req);
      if (websocket::is_upgrade(req)) {
        if (req.target() == "/session") {
          serve_websocket(*engine, std::move(socket), req);
          return;
        }
        http::response<http::string_body> res{http::status::not_found, req.version()};
        res.set(http::field::content_type, "application/json");
        res.body() = R"({"error":"NotFound","message":"stream endpoint is /session"})";
        res.prepare_payload();
        http::write(socket, res);
        return;
      }
      HttpReply reply;
      if (req.method() != http::verb::get) {
        reply = {405, "application/json", R"({"error":"MethodNotAllowed"})"};
      } else {
        reply = engine->handle_get(std::string_view(req.target().data(), req.target().size()));
      }
      http::response<http::string_body> res{static_cast<http::status>(reply.status), req.version()};
      res.set(http::field::content_type, reply.content_type);
      res.set(http::field::access_control_allow_origin, "*");
      res.keep_alive(req.keep_alive());
      res.body() = std::move(reply.body);
      res.prepare_payload();
      http::write(socket, res);
      if (!req.keep_alive()) break;
    }
    beast::error_code ec;
    socket.shutdown(tcp::socket::shutdown_send, ec);
  } catch (const std::exception&) {
    // Peer went away or sent garbage; the connection simply ends.
  }
}

}  // namespace

struct Server::Impl {
  std::shared_ptr<const Engine> engine;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::atomic<bool> stopping{false};
  unsigned short port = 0;

  void accept_next() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec || stopping) return;
      std::thread(serve_connection, engine, std::move(socket)).detach();
      accept_next();
    });
  }
};

Server::Server(std::shared_ptr<const Engine> engine, ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->engine = std::move(engine);
  try {
    const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
    impl_->port = impl_->acceptor.local_endpoint().port();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, std::string("cannot listen: ") + e.what());
  }
}

Server::~Server() { stop(); }

unsigned short Server::port() const noexcept { return impl_->port; }

void Server::run() {
  impl_->accept_next();
  impl_->ioc.run();
}

void Server::stop() {
  if (impl_->stopping.exchange(true)) return;
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
  });
  impl_->ioc.stop();
}

}  // namespace herbar
