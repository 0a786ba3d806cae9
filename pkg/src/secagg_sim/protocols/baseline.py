"""Insecure baseline: clients send plaintext inputs, the server adds them."""

from ..api import AggregationClient, DropoutAggregationServer


class BaselineClient(AggregationClient):
    def round(self, round_number, message):
        if round_number == 1:  # send secret input to server
            return self.secret_input


class BaselineServer(DropoutAggregationServer):
    client_rounds = 1
    input_round = 1

    def round(self, round_number, messages):
        if round_number == 1:  # start the protocol
            return {client: None for client in self.clients}
        if round_number == 2:  # sum up received vectors
            self.succeed(self.GF.vec_sum(messages.values()))
