#include "server.hpp"

#include <atomic>
#include <cstdlib>
#include <deque>
#include <optional>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/thread_pool.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace pchart {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

using WorkStrand = net::strand<net::thread_pool::executor_type>;

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, Hub& hub, net::thread_pool& pool)
      : ws_(std::move(socket)), hub_(hub), work_(net::make_strand(pool.get_executor())) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
      beast::get_lowest_layer(self->ws_).close();
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsConnection> weak = shared_from_this();
    session_ = hub_.connect([weak](const std::string& text) {
      if (auto self = weak.lock()) self->send(text);
    });
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      net::post(work_, [self = shared_from_this()] { self->hub_.disconnect(self->session_); });
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    net::post(work_, [self = shared_from_this(), text = std::move(text)] { self->hub_.receive(self->session_, text); });
    read();
  }

  void send(const std::string& text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text] {
      self->outbox_.push_back(text);
      if (self->outbox_.size() == 1) self->write();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      outbox_.clear();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  WorkStrand work_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::string session_;
};

}  // namespace

struct SyncServer::Impl {
  Impl(Hub& h, const std::string& address, unsigned short port, unsigned n)
      : hub(h), acceptor(ioc), pool(2), threads(n == 0 ? 1 : n) {
    tcp::endpoint ep(net::ip::make_address(address), port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto c = std::make_shared<WsConnection>(std::move(socket), hub, pool);
      {
        std::lock_guard<std::mutex> lock(mu);
        connections.push_back(c);
      }
      c->start();
      accept();
    });
  }

  Hub& hub;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::thread_pool pool;
  unsigned threads;
  std::mutex mu;
  std::vector<std::weak_ptr<WsConnection>> connections;
  std::atomic<bool> stopped{false};
  std::optional<net::signal_set> signals;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> guard{net::make_work_guard(ioc)};
};

SyncServer::SyncServer(Hub& hub, const std::string& address, unsigned short port, unsigned threads)
    : impl_(std::make_unique<Impl>(hub, address, port, threads)) {}

SyncServer::~SyncServer() {
  stop();
  impl_->pool.join();
}

unsigned short SyncServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SyncServer::run() {
  impl_->accept();
  std::vector<std::thread> extra;
  for (unsigned i = 1; i < impl_->threads; ++i) extra.emplace_back([this] { impl_->ioc.run(); });
  impl_->ioc.run();
  for (auto& t : extra) t.join();
}

void SyncServer::stop() {
  if (impl_->stopped.exchange(true)) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    std::lock_guard<std::mutex> lock(impl_->mu);
    for (auto& w : impl_->connections)
      if (auto c = w.lock()) c->close();
    impl_->connections.clear();
    if (impl_->signals) impl_->signals->cancel(ec);
    impl_->guard.reset();
  });
}

void SyncServer::stop_on_signals() {
  impl_->signals.emplace(impl_->ioc, SIGINT, SIGTERM);
  impl_->signals->async_wait([this](beast::error_code ec, int) {
    if (!ec) stop();
  });
}

unsigned short default_port(unsigned short fallback) {
  const char* env = std::getenv("PCHART_PORT");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v <= 0 || v > 65535) return fallback;
  return static_cast<unsigned short>(v);
}

}  // namespace pchart
