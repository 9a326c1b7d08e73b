"""BPMN 2.0 XML serialization and parsing.

Serialization is canonical: pools, nodes, flows and message flows are written
sorted by id, attributes in a fixed order, two-space indentation, no
timestamps — so serialize(parse(serialize(m))) is byte-identical to
serialize(m), and two compilation runs of the same network produce the same
file.

Parsing is lenient: it accepts any BPMN 2.0 interchange document, ignores
elements outside the supported subset (lanes, data objects, documentation,
diagram interchange) and maps foreign task flavours onto the nearest
supported kind, which is what the coverage auditor needs to read real-world
models.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Union

from .model import (
    Association,
    BpmnModel,
    FlowNode,
    MessageFlow,
    NodeKind,
    Pool,
    SequenceFlow,
)

MODEL_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
DI_NS = "http://www.omg.org/spec/BPMN/20100524/DI"
DC_NS = "http://www.omg.org/spec/DD/20100524/DC"
TARGET_NS = "http://demoflow.dev/bpmn"


class ModelFormatError(ValueError):
    pass


_EVENT_KINDS = {
    NodeKind.START_EVENT: "startEvent",
    NodeKind.MESSAGE_START_EVENT: "startEvent",
    NodeKind.END_EVENT: "endEvent",
    NodeKind.TERMINATE_END_EVENT: "endEvent",
    NodeKind.MESSAGE_CATCH: "intermediateCatchEvent",
    NodeKind.COMPENSATION_THROW: "intermediateThrowEvent",
    NodeKind.COMPENSATION_BOUNDARY: "boundaryEvent",
}

_PLAIN_KINDS = {
    NodeKind.TASK: "task",
    NodeKind.SEND_TASK: "sendTask",
    NodeKind.COMPENSATION_HANDLER: "task",
    NodeKind.EXCLUSIVE_GATEWAY: "exclusiveGateway",
    NodeKind.PARALLEL_GATEWAY: "parallelGateway",
    NodeKind.EVENT_BASED_GATEWAY: "eventBasedGateway",
}


def _node_element(node: FlowNode) -> ET.Element:
    tag = _EVENT_KINDS.get(node.kind) or _PLAIN_KINDS[node.kind]
    element = ET.Element(tag)
    element.set("id", node.id)
    if node.name:
        element.set("name", node.name)
    if node.kind is NodeKind.COMPENSATION_HANDLER:
        element.set("isForCompensation", "true")
    if node.kind is NodeKind.COMPENSATION_BOUNDARY:
        element.set("attachedToRef", node.attached_to or "")
        element.set("cancelActivity", "false")
    if node.kind is NodeKind.MESSAGE_START_EVENT or node.kind is NodeKind.MESSAGE_CATCH:
        ET.SubElement(element, "messageEventDefinition")
    if node.kind is NodeKind.TERMINATE_END_EVENT:
        ET.SubElement(element, "terminateEventDefinition")
    if node.kind is NodeKind.COMPENSATION_BOUNDARY:
        ET.SubElement(element, "compensateEventDefinition")
    if node.kind is NodeKind.COMPENSATION_THROW:
        definition = ET.SubElement(element, "compensateEventDefinition")
        if node.compensates:
            definition.set("activityRef", node.compensates)
    return element


_NODE_SIZES = {
    NodeKind.TASK: (100, 80),
    NodeKind.SEND_TASK: (100, 80),
    NodeKind.COMPENSATION_HANDLER: (100, 80),
    NodeKind.EXCLUSIVE_GATEWAY: (50, 50),
    NodeKind.PARALLEL_GATEWAY: (50, 50),
    NodeKind.EVENT_BASED_GATEWAY: (50, 50),
}


def _grid_layout(root: ET.Element, model: BpmnModel) -> None:
    """A rough deterministic grid diagram: one row of shapes per pool."""
    root.set("xmlns:bpmndi", DI_NS)
    root.set("xmlns:dc", DC_NS)
    diagram = ET.SubElement(root, "bpmndi:BPMNDiagram")
    diagram.set("id", f"diagram_{model.id}")
    plane = ET.SubElement(diagram, "bpmndi:BPMNPlane")
    plane.set("id", f"plane_{model.id}")
    plane.set("bpmnElement", model.id)
    row_height = 320
    for pool_index, pool in enumerate(model.pools):
        pool_y = 40 + pool_index * row_height
        nodes = sorted(pool.nodes, key=lambda n: n.id)
        shape = ET.SubElement(plane, "bpmndi:BPMNShape")
        shape.set("id", f"shape_{pool.id}")
        shape.set("bpmnElement", pool.id)
        shape.set("isHorizontal", "true")
        bounds = ET.SubElement(shape, "dc:Bounds")
        bounds.set("x", "20")
        bounds.set("y", str(pool_y))
        bounds.set("width", str(80 + 160 * max(1, len(nodes))))
        bounds.set("height", str(row_height - 40))
        for node_index, node in enumerate(nodes):
            width, height = _NODE_SIZES.get(node.kind, (36, 36))
            shape = ET.SubElement(plane, "bpmndi:BPMNShape")
            shape.set("id", f"shape_{node.id}")
            shape.set("bpmnElement", node.id)
            bounds = ET.SubElement(shape, "dc:Bounds")
            bounds.set("x", str(60 + 160 * node_index))
            bounds.set("y", str(pool_y + 120 - height // 2))
            bounds.set("width", str(width))
            bounds.set("height", str(height))


def serialize_model(model: BpmnModel, layout: bool = False) -> bytes:
    root = ET.Element("definitions")
    root.set("xmlns", MODEL_NS)
    root.set("id", f"defs_{model.id}")
    root.set("targetNamespace", TARGET_NS)

    collaboration = ET.SubElement(root, "collaboration")
    collaboration.set("id", model.id)
    for pool in sorted(model.pools, key=lambda p: p.id):
        participant = ET.SubElement(collaboration, "participant")
        participant.set("id", pool.id)
        if pool.name:
            participant.set("name", pool.name)
        participant.set("processRef", pool.process_id)
    for flow in sorted(model.message_flows, key=lambda f: f.id):
        element = ET.SubElement(collaboration, "messageFlow")
        element.set("id", flow.id)
        element.set("sourceRef", flow.source)
        element.set("targetRef", flow.target)

    for pool in sorted(model.pools, key=lambda p: p.id):
        process = ET.SubElement(root, "process")
        process.set("id", pool.process_id)
        process.set("isExecutable", "false")
        for node in sorted(pool.nodes, key=lambda n: n.id):
            process.append(_node_element(node))
        for flow in sorted(pool.flows, key=lambda f: f.id):
            element = ET.SubElement(process, "sequenceFlow")
            element.set("id", flow.id)
            if flow.label:
                element.set("name", flow.label)
            element.set("sourceRef", flow.source)
            element.set("targetRef", flow.target)
        for assoc in sorted(pool.associations, key=lambda a: a.id):
            element = ET.SubElement(process, "association")
            element.set("id", assoc.id)
            element.set("sourceRef", assoc.source)
            element.set("targetRef", assoc.target)

    if layout:
        _grid_layout(root, model)

    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


_TASK_TAGS = {
    "task", "userTask", "serviceTask", "manualTask", "scriptTask",
    "businessRuleTask", "callActivity", "subProcess",
}


def _parse_node(element: ET.Element) -> FlowNode:
    tag = _local(element.tag)
    children = {_local(child.tag) for child in element}
    node_id = element.get("id", "")
    name = element.get("name", "")

    if tag == "startEvent":
        kind = (
            NodeKind.MESSAGE_START_EVENT
            if "messageEventDefinition" in children
            else NodeKind.START_EVENT
        )
        return FlowNode(node_id, kind, name)
    if tag == "endEvent":
        kind = (
            NodeKind.TERMINATE_END_EVENT
            if "terminateEventDefinition" in children
            else NodeKind.END_EVENT
        )
        return FlowNode(node_id, kind, name)
    if tag in ("intermediateCatchEvent", "receiveTask"):
        return FlowNode(node_id, NodeKind.MESSAGE_CATCH, name)
    if tag == "intermediateThrowEvent":
        compensates = None
        for child in element:
            if _local(child.tag) == "compensateEventDefinition":
                compensates = child.get("activityRef")
        return FlowNode(node_id, NodeKind.COMPENSATION_THROW, name, compensates=compensates)
    if tag == "boundaryEvent":
        return FlowNode(
            node_id, NodeKind.COMPENSATION_BOUNDARY, name,
            attached_to=element.get("attachedToRef"),
        )
    if tag == "sendTask":
        return FlowNode(node_id, NodeKind.SEND_TASK, name)
    if tag in _TASK_TAGS:
        if element.get("isForCompensation") == "true":
            return FlowNode(node_id, NodeKind.COMPENSATION_HANDLER, name)
        return FlowNode(node_id, NodeKind.TASK, name)
    if tag == "exclusiveGateway":
        return FlowNode(node_id, NodeKind.EXCLUSIVE_GATEWAY, name)
    if tag in ("parallelGateway", "inclusiveGateway"):
        return FlowNode(node_id, NodeKind.PARALLEL_GATEWAY, name)
    if tag == "eventBasedGateway":
        return FlowNode(node_id, NodeKind.EVENT_BASED_GATEWAY, name)
    raise ModelFormatError(f"unsupported flow element <{tag}>")


_FLOW_NODE_TAGS = {
    "startEvent", "endEvent", "intermediateCatchEvent", "intermediateThrowEvent",
    "boundaryEvent", "sendTask", "exclusiveGateway", "parallelGateway",
    "inclusiveGateway", "eventBasedGateway", "receiveTask",
} | _TASK_TAGS

# Process children that carry no control flow and are safe to ignore.
_IGNORED_TAGS = {
    "documentation", "extensionElements", "laneSet", "lane",
    "dataObject", "dataObjectReference", "dataStoreReference",
    "ioSpecification", "property", "textAnnotation", "group",
}


def parse_model(source: Union[str, bytes, Path]) -> BpmnModel:
    """Parse a BPMN document (XML text/bytes, or a path to a file)."""
    if isinstance(source, Path):
        source = source.read_bytes()
    try:
        root = ET.fromstring(source)
    except ET.ParseError as exc:
        raise ModelFormatError(f"invalid XML: {exc}") from exc
    if _local(root.tag) != "definitions":
        raise ModelFormatError(f"expected <definitions> root, got <{_local(root.tag)}>")

    collaboration = None
    processes: dict[str, ET.Element] = {}
    for child in root:
        tag = _local(child.tag)
        if tag == "collaboration" and collaboration is None:
            collaboration = child
        elif tag == "process":
            processes[child.get("id", "")] = child

    model = BpmnModel(id="collaboration")
    participants = []
    if collaboration is not None:
        model.id = collaboration.get("id", "collaboration")
        for child in collaboration:
            tag = _local(child.tag)
            if tag == "participant":
                participants.append(child)
            elif tag == "messageFlow":
                model.message_flows.append(
                    MessageFlow(
                        child.get("id", ""),
                        child.get("sourceRef", ""),
                        child.get("targetRef", ""),
                    )
                )
    else:
        # a bare process file: wrap every process in an implicit pool
        for process_id in processes:
            participant = ET.Element("participant")
            participant.set("id", f"pool_{process_id}")
            participant.set("processRef", process_id)
            participants.append(participant)

    for participant in participants:
        process_id = participant.get("processRef", "")
        pool_id = participant.get("id", "")
        pool = Pool(
            id=pool_id,
            process_id=process_id,
            name=participant.get("name", ""),
            actor_id=pool_id.removeprefix("pool_"),
        )
        process = processes.get(process_id)
        if process is None:
            raise ModelFormatError(f"participant {pool_id} references missing process {process_id}")
        for child in process:
            tag = _local(child.tag)
            if tag == "sequenceFlow":
                pool.flows.append(
                    SequenceFlow(
                        child.get("id", ""),
                        child.get("sourceRef", ""),
                        child.get("targetRef", ""),
                        child.get("name", ""),
                    )
                )
            elif tag == "association":
                pool.associations.append(
                    Association(
                        child.get("id", ""),
                        child.get("sourceRef", ""),
                        child.get("targetRef", ""),
                    )
                )
            elif tag in _FLOW_NODE_TAGS:
                pool.nodes.append(_parse_node(child))
            elif tag not in _IGNORED_TAGS:
                # a flow element this tool cannot represent: dropping it would
                # silently change the process, so refuse the file instead
                raise ModelFormatError(f"unsupported flow element <{tag}>")
        model.pools.append(pool)

    return model
