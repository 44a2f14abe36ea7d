"""Declarative page models.

Fixtures describe each activity's screen as data; build_page turns that
description plus (params, scroll_offset, seed) into a concrete Page. The
mapping is pure: identical inputs always produce an identical Page.

Page spec keys (all optional):
  nodes       list of node templates; "{name}" in text fills from params
  list        scrollable list region: bounds, row_height, item_activity, item_param
  items       ordered list of {title, <field>: <value>, ...} records
  overlays    render-layer-only texts: {text, bbox}
  scene       ground-truth scene descriptor for model stubs
  truth_boxes map of target query -> bbox for the visual-grounder stub
  cases       [{when: {param: value}, page: {...}}, ...] params-matched variants

Node template keys: id, role, text, desc, resource, bounds, clickable,
scrollable, on_tap, param (input binding), repeat (expand per value of a
comma-list param), repeat_step, selected_mark.
"""

from __future__ import annotations

from typing import Mapping, Optional

from ..geometry import Rect
from .types import (
    ItemRecord,
    ORIGIN_OVERLAY,
    ORIGIN_STRUCTURAL,
    Page,
    RenderText,
    SceneDescriptor,
    UiNode,
    validate_tree,
)

_ROOT_BOUNDS = Rect(0, 0, 1080, 1920)


def fill_template(template: str, values: Mapping[str, str]) -> str:
    """Replace {name} placeholders; unknown names fill as empty strings."""
    out = template
    for key, val in values.items():
        out = out.replace("{" + key + "}", str(val))
    # unresolved placeholders render as empty, keeping pages total over params
    while "{" in out and "}" in out:
        start = out.find("{")
        end = out.find("}", start)
        if end < 0:
            break
        out = out[:start] + out[end + 1:]
    return out


def _resolve_case(page_spec: Mapping, params: Mapping[str, str]) -> Mapping:
    for case in page_spec.get("cases", ()):
        when = case.get("when", {})
        if all(str(params.get(k, "")) == str(v) for k, v in when.items()):
            return case["page"]
    return page_spec


def _csv_list(value: str) -> list[str]:
    return [v for v in value.split(",") if v] if value else []


def _expand_templates(templates, params: Mapping[str, str]):
    """Yield (filled node template, effect values) pairs, expanding repeats."""
    for tpl in templates:
        repeat = tpl.get("repeat")
        if not repeat:
            yield tpl, dict(params)
            continue
        values = _csv_list(str(params.get(repeat["param"], "")))
        step = tpl.get("repeat_step", [0, (tpl["bounds"][3] - tpl["bounds"][1]) + 8])
        for j, value in enumerate(values):
            bounds = [
                tpl["bounds"][0] + step[0] * j,
                tpl["bounds"][1] + step[1] * j,
                tpl["bounds"][2] + step[0] * j,
                tpl["bounds"][3] + step[1] * j,
            ]
            expanded = dict(tpl)
            expanded["id"] = f"{tpl['id']}_{j}"
            expanded["bounds"] = bounds
            expanded.pop("repeat", None)
            yield expanded, {**params, "item": value}


def _node_from_template(tpl: Mapping, values: Mapping[str, str]) -> UiNode:
    text = fill_template(str(tpl.get("text", "")), values)
    mark = tpl.get("selected_mark")
    if mark and values.get("item") is not None:
        selected = _csv_list(str(values.get(mark["param"], "")))
        if values["item"] in selected:
            text = mark.get("prefix", "[x] ") + text
    return UiNode(
        node_id=tpl["id"],
        role=tpl.get("role", "text"),
        bounds=Rect.from_seq(tpl["bounds"]),
        text=text,
        content_desc=fill_template(str(tpl.get("desc", "")), values),
        resource_id=tpl.get("resource", tpl["id"]),
        clickable=bool(tpl.get("clickable", False)),
        scrollable=bool(tpl.get("scrollable", False)),
    )


def _build_list(list_spec: Mapping, items: list[ItemRecord], scroll_offset: int):
    """Build the scrollable list node, its rows, and row tap effects."""
    bounds = Rect.from_seq(list_spec["bounds"])
    row_h = int(list_spec.get("row_height", 400))
    visible = max(1, bounds.height // row_h)
    max_offset = max(0, len(items) - visible)
    offset = min(max(0, scroll_offset), max_offset)

    rows = []
    effects = {}
    item_activity = list_spec.get("item_activity")
    item_param = list_spec.get("item_param", "title")
    window = items[offset:offset + visible]
    for slot, item in enumerate(window):
        idx = offset + slot
        y0 = bounds.top + slot * row_h
        row_bounds = Rect(bounds.left, y0, bounds.right, y0 + row_h)
        title_h = max(2, (row_h * 2) // 5)
        children = [
            UiNode(
                node_id=f"item_{idx}_title",
                role="text",
                bounds=Rect(bounds.left + 16, y0 + 8, bounds.right - 16, y0 + title_h),
                text=item.title,
                resource_id="item_title",
            )
        ]
        fields = [(k, v) for k, v in item.fields if k != "title"]
        if fields:
            strip = max(2, (row_h - title_h - 8) // len(fields))
            for fi, (fname, fval) in enumerate(fields):
                fy0 = y0 + title_h + fi * strip
                children.append(
                    UiNode(
                        node_id=f"item_{idx}_{fname}",
                        role="text",
                        bounds=Rect(bounds.left + 16, fy0, bounds.right - 16, fy0 + strip),
                        text=f"{fname}: {fval}",
                        resource_id=f"item_{fname}",
                    )
                )
        row = UiNode(
            node_id=f"item_{idx}",
            role="container",
            bounds=row_bounds,
            clickable=bool(item_activity),
            resource_id="item_row",
            children=tuple(children),
        )
        rows.append(row)
        if item_activity:
            effects[f"item_{idx}"] = {
                "type": "navigate",
                "activity": item_activity,
                "params": {item_param: item.title},
                "literal": True,
            }

    list_node = UiNode(
        node_id="list",
        role="list",
        bounds=bounds,
        scrollable=True,
        resource_id="list",
        children=tuple(rows),
    )
    return list_node, effects, offset, visible


def parse_items(raw_items) -> tuple[ItemRecord, ...]:
    records = []
    for raw in raw_items or ():
        title = str(raw.get("title", ""))
        fields = tuple(sorted((str(k), str(v)) for k, v in raw.items()))
        records.append(ItemRecord(title=title, fields=fields))
    return tuple(records)


def build_page(activity: str, page_spec: Mapping, params: Mapping[str, str],
               scroll_offset: int, seed: int = 0) -> tuple[Page, dict]:
    """Build the Page for an activity and the node-id -> effect map.

    The seed is threaded through for fixtures that want seeded content; the
    builtin templates are seed-independent.
    """
    spec = _resolve_case(page_spec, params)
    items = parse_items(spec.get("items"))

    children: list[UiNode] = []
    effects: dict[str, dict] = {}
    for tpl, values in _expand_templates(spec.get("nodes", ()), params):
        node = _node_from_template(tpl, values)
        children.append(node)
        if tpl.get("on_tap"):
            effects[node.node_id] = {"effect": tpl["on_tap"], "values": values}
        if tpl.get("param"):
            effects[node.node_id] = {"effect": {"type": "input", "param": tpl["param"]},
                                     "values": values}

    offset, visible = 0, 0
    if spec.get("list"):
        list_node, row_effects, offset, visible = _build_list(
            spec["list"], list(items), scroll_offset)
        children.append(list_node)
        for node_id, eff in row_effects.items():
            effects[node_id] = {"effect": eff, "values": dict(params)}

    root = UiNode(
        node_id="root",
        role="container",
        bounds=_ROOT_BOUNDS,
        resource_id="root",
        children=tuple(children),
    )
    validate_tree(root)

    render = [
        RenderText(text=n.text, bbox=n.bounds, origin=ORIGIN_STRUCTURAL,
                   backing_node=n.node_id)
        for n in root.iter_nodes()
        if n.text
    ]
    for overlay in spec.get("overlays", ()):
        render.append(
            RenderText(
                text=fill_template(str(overlay["text"]), params),
                bbox=Rect.from_seq(overlay["bbox"]),
                origin=ORIGIN_OVERLAY,
                backing_node=None,
            )
        )

    scene = None
    if spec.get("scene"):
        s = spec["scene"]
        scene = SceneDescriptor(
            objects=tuple(s.get("objects", ())),
            scene=s.get("scene", ""),
            event=s.get("event", ""),
        )

    truth_boxes = tuple(
        sorted((q, Rect.from_seq(b)) for q, b in (spec.get("truth_boxes") or {}).items())
    )

    page = Page(
        activity=activity,
        params=tuple(sorted((str(k), str(v)) for k, v in params.items())),
        ui_root=root,
        render_layer=tuple(render),
        scroll_offset=offset,
        items=items if spec.get("list") is not None or items else None,
        visible_items=(offset, offset + visible) if spec.get("list") else (0, 0),
        scene=scene,
        truth_boxes=truth_boxes,
    )
    return page, effects
