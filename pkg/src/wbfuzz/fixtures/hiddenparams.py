"""Endpoints that read inputs the published schema never mentions.

The payment notification handler pulls its fields out of the raw
parameter map, the orders endpoint parses an undeclared JSON body.
"""

from functools import partial

from ..harness import App, HttpError, SutDescriptor
from ..schema import FieldShape as F, dto

ORDER = dto("Order", item=F("string"), quantity=F("integer"))

OPENAPI = """
openapi: 3.0.0
info: {title: hiddenparams, version: "1"}
paths:
  /paypal/ipn/consumer/{consumerID}:
    post:
      parameters:
        - {name: consumerID, in: path, required: true, schema: {type: integer, format: int64}}
      responses:
        "200": {description: processed}
        "400": {description: bad notification}
  /api/orders:
    post:
      requestBody:
        content:
          application/json: {}
      responses:
        "201": {description: created}
        "400": {description: rejected}
"""


def build(app: App, fixed: bool = False) -> None:
    @app.route("POST", "/paypal/ipn/consumer/{consumerID}")
    def ipn(sdk, consumerID):
        ipn_map = sdk.req_parameter_map()
        payer = sdk.map_get(ipn_map, "payer_email", "ipn-payer")
        gross = sdk.map_get(ipn_map, "mc_gross", "ipn-gross")
        if fixed and gross is None:
            raise HttpError(400, "missing mc_gross")
        try:
            quantity = sdk.parse_float(gross, "ipn-parse")
        except ValueError:
            if fixed:
                raise HttpError(400, "mc_gross is not a number")
            raise
        sdk.line("parsed")
        if sdk.cmp("ipn-large", quantity, ">", 100):
            sdk.line("large-payment")
            status = "review"
        else:
            sdk.line("small-payment")
            status = "accepted"
        if payer is not None:
            sdk.line("payer-known")
        return 200, {"consumer": consumerID, "status": status}

    @app.route("POST", "/api/orders")
    def order(sdk):
        body = sdk.json_body(ORDER)
        if not isinstance(body, dict):
            raise HttpError(400, "no order")
        qty = body.get("quantity")
        if not isinstance(qty, int) or isinstance(qty, bool):
            raise HttpError(400, "quantity required")
        if sdk.cmp("order-bulk", qty, ">=", 50):
            sdk.line("bulk-order")
        return 201, {"item": body.get("item"), "quantity": qty}


def descriptor(fixed: bool = False) -> SutDescriptor:
    return SutDescriptor("hiddenparams", OPENAPI, partial(build, fixed=fixed),
                         description="parameter-map reads and an undeclared JSON body")
