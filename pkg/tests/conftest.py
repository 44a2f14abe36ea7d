"""Shared device fixtures used across the suite."""

from __future__ import annotations

import pytest

from pocketagent.device import SimDevice


CATALOG = [
    {"title": "Evian Facial Spray 300ml", "price": "12.9", "sales": "2300"},
    {"title": "Evian Spray Travel Pack", "price": "9.9", "sales": "1800"},
    {"title": "Evian Mineral Spray 150ml", "price": "15.0", "sales": "950"},
    {"title": "Hydra Mist Classic", "price": "11.5", "sales": "700"},
    {"title": "Alpine Face Mist", "price": "10.0", "sales": "430"},
    {"title": "Evian Spray Duo Set", "price": "13.8", "sales": "390"},
    {"title": "Thermal Water Spray XL", "price": "14.2", "sales": "310"},
    {"title": "Evian Spray Mini", "price": "8.5", "sales": "280"},
    {"title": "Glacier Mist 200ml", "price": "12.0", "sales": "150"},
    {"title": "Evian Spray Family Size", "price": "16.7", "sales": "90"},
]


def shop_app_fixture() -> dict:
    return {
        "app_id": "shopmart",
        "display_name": "ShopMart",
        "home_activity": "Home",
        "activities": [
            {
                "name": "Home",
                "exported": True,
                "deeplinks": ["app://shopmart/home"],
                "page": {
                    "nodes": [
                        {"id": "title", "role": "text", "text": "ShopMart",
                         "bounds": [0, 0, 1080, 160]},
                        {"id": "search_box", "role": "input", "text": "{q}",
                         "param": "q", "bounds": [40, 200, 840, 320],
                         "clickable": True},
                        {"id": "search_btn", "role": "button", "text": "Search",
                         "bounds": [860, 200, 1040, 320], "clickable": True,
                         "on_tap": {"type": "navigate", "activity": "SearchResults",
                                    "params": {"q": "{q}"}}},
                    ],
                },
            },
            {
                "name": "SearchResults",
                "exported": True,
                "deeplinks": ["app://shopmart/search/{q}"],
                "page": {
                    "nodes": [
                        {"id": "hdr", "role": "text", "text": "Results for {q}",
                         "bounds": [0, 0, 1080, 160]},
                    ],
                    "list": {"bounds": [0, 320, 1080, 1920], "row_height": 400,
                             "item_activity": "ItemDetail", "item_param": "title"},
                    "items": CATALOG,
                },
            },
            {
                "name": "ItemDetail",
                "exported": True,
                "deeplinks": ["app://shopmart/item/{title}"],
                "page": {
                    "nodes": [
                        {"id": "item_name", "role": "text", "text": "{title}",
                         "bounds": [0, 0, 1080, 200]},
                        {"id": "buy", "role": "button", "text": "Buy Now",
                         "bounds": [40, 1700, 1040, 1880], "clickable": True},
                    ],
                },
            },
            {
                "name": "AdLanding",
                "exported": True,
                "deeplinks": ["app://shopmart/promo"],
                "page": {
                    "nodes": [
                        {"id": "promo", "role": "text", "text": "Daily Deals",
                         "bounds": [0, 0, 1080, 160]},
                    ],
                    "overlays": [
                        {"text": "Claim Reward", "bbox": [300, 800, 780, 960]},
                    ],
                    "truth_boxes": {"Claim Reward": [300, 800, 780, 960]},
                },
            },
        ],
    }


def editor_app_fixture() -> dict:
    return {
        "app_id": "clipcraft",
        "display_name": "ClipCraft",
        "home_activity": "Compose",
        "activities": [
            {
                "name": "Compose",
                "exported": True,
                "deeplinks": ["app://clipcraft/compose"],
                "page": {
                    "nodes": [
                        {"id": "hdr", "role": "text", "text": "One-Tap Video",
                         "bounds": [0, 0, 1080, 140]},
                        {"id": "tile", "role": "image", "text": "{item}",
                         "repeat": {"param": "files"},
                         "repeat_step": [0, 180],
                         "selected_mark": {"param": "selected", "prefix": "[x] "},
                         "bounds": [40, 180, 1040, 340], "clickable": True,
                         "on_tap": {"type": "toggle_param_list", "key": "selected",
                                    "value": "{item}"}},
                        {"id": "create", "role": "button", "text": "Create",
                         "bounds": [40, 1720, 1040, 1880], "clickable": True,
                         "on_tap": {"type": "navigate", "activity": "Created",
                                    "params": {"selected": "{selected}"}}},
                    ],
                },
            },
            {
                "name": "Created",
                "exported": True,
                "deeplinks": [],
                "page": {
                    "nodes": [
                        {"id": "done", "role": "text", "text": "Video created",
                         "bounds": [0, 0, 1080, 200]},
                    ],
                },
            },
        ],
    }


def secret_app_fixture() -> dict:
    return {
        "app_id": "vault",
        "display_name": "Vault",
        "home_activity": "Hidden",
        "activities": [
            {
                "name": "Hidden",
                "exported": False,
                "deeplinks": ["app://vault/hidden/{code}"],
                "page": {
                    "nodes": [
                        {"id": "t", "role": "text", "text": "Vault {code}",
                         "bounds": [0, 0, 1080, 200]},
                    ],
                },
            },
        ],
    }


def deals_app_fixture(flash_exported: bool = True,
                      flash_deeplink: bool = True) -> dict:
    """Three-hop navigation to a flash-sale page; the last hop deeplinks in."""
    if flash_deeplink:
        final_hop = {"type": "navigate_uri", "uri": "app://dealhub/flash/downtown"}
    else:
        final_hop = {"type": "navigate", "activity": "FlashSale",
                     "params": {"city": "downtown"}}
    return {
        "app_id": "dealhub",
        "display_name": "DealHub",
        "home_activity": "Home",
        "activities": [
            {
                "name": "Home",
                "exported": True,
                "deeplinks": ["app://dealhub/home"],
                "page": {
                    "nodes": [
                        {"id": "hdr", "role": "text", "text": "DealHub",
                         "bounds": [0, 0, 1080, 160]},
                        {"id": "local", "role": "button", "text": "Local Deals",
                         "bounds": [40, 300, 1040, 460], "clickable": True,
                         "on_tap": {"type": "navigate", "activity": "Local",
                                    "params": {}}},
                    ],
                },
            },
            {
                "name": "Local",
                "exported": True,
                "deeplinks": [],
                "page": {
                    "nodes": [
                        {"id": "hdr", "role": "text", "text": "Local Deals",
                         "bounds": [0, 0, 1080, 160]},
                        {"id": "food", "role": "button", "text": "Food and Drink",
                         "bounds": [40, 300, 1040, 460], "clickable": True,
                         "on_tap": {"type": "navigate", "activity": "Food",
                                    "params": {}}},
                    ],
                },
            },
            {
                "name": "Food",
                "exported": True,
                "deeplinks": [],
                "page": {
                    "nodes": [
                        {"id": "hdr", "role": "text", "text": "Food and Drink",
                         "bounds": [0, 0, 1080, 160]},
                        {"id": "flash_btn", "role": "button", "text": "Flash Sale",
                         "bounds": [40, 300, 1040, 460], "clickable": True,
                         "on_tap": final_hop},
                    ],
                },
            },
            {
                "name": "FlashSale",
                "exported": flash_exported,
                "deeplinks": (["app://dealhub/flash/{city}"]
                              if flash_deeplink else []),
                "page": {
                    "nodes": [
                        {"id": "hdr", "role": "text", "text": "Flash Sale",
                         "bounds": [0, 0, 1080, 160]},
                        {"id": "city", "role": "text", "text": "Deals in {city}",
                         "bounds": [0, 200, 1080, 320]},
                        {"id": "deal1", "role": "text", "text": "50% off hotpot",
                         "bounds": [0, 400, 1080, 560]},
                        {"id": "deal2", "role": "text", "text": "Half price coffee",
                         "bounds": [0, 600, 1080, 760]},
                    ],
                },
            },
        ],
    }


QUIZ_QUESTIONS = [
    ("What is 7 x 8?", ["54", "56", "63"], "56"),
    ("What is 12 + 30?", ["42", "40", "52"], "42"),
    ("What is 9 squared?", ["81", "72", "99"], "81"),
]

QUIZ_ANSWERS = {q: correct for q, _, correct in QUIZ_QUESTIONS}

QUIZ_SCENE = {"objects": ["algebra problems"], "scene": "quiz app",
              "event": "homework"}


def quiz_app_fixture() -> dict:
    cases = []
    for i, (question, options, correct) in enumerate(QUIZ_QUESTIONS):
        nodes = [
            {"id": "qlabel", "role": "text", "text": question,
             "resource": "question", "bounds": [0, 100, 1080, 260]},
        ]
        for j, option in enumerate(options):
            node = {
                "id": f"opt{j}", "role": "button", "text": option,
                "bounds": [40, 400 + j * 240, 1040, 560 + j * 240],
                "clickable": True,
            }
            if option == correct:
                if i + 1 < len(QUIZ_QUESTIONS):
                    node["on_tap"] = {"type": "navigate", "activity": "Question",
                                      "params": {"i": str(i + 1)}}
                else:
                    node["on_tap"] = {"type": "navigate", "activity": "Done",
                                      "params": {}}
            else:
                node["on_tap"] = {"type": "set_param", "key": "wrong",
                                  "value": "1"}
            nodes.append(node)
        cases.append({"when": {"i": str(i)}, "page": {"nodes": nodes,
                                                      "scene": QUIZ_SCENE}})
    return {
        "app_id": "quizbox",
        "display_name": "QuizBox",
        "home_activity": "Home",
        "activities": [
            {
                "name": "Home",
                "exported": True,
                "deeplinks": ["app://quizbox/home"],
                "page": {
                    "nodes": [
                        {"id": "hdr", "role": "text", "text": "QuizBox",
                         "bounds": [0, 0, 1080, 160]},
                        {"id": "start", "role": "button", "text": "Start Quiz",
                         "bounds": [40, 400, 1040, 560], "clickable": True,
                         "on_tap": {"type": "navigate", "activity": "Question",
                                    "params": {"i": "0"}}},
                    ],
                    "scene": QUIZ_SCENE,
                },
            },
            {
                "name": "Question",
                "exported": True,
                "deeplinks": [],
                "page": {"cases": cases, "nodes": [
                    {"id": "qlabel", "role": "text", "text": "Quiz over",
                     "bounds": [0, 100, 1080, 260]},
                ]},
            },
            {
                "name": "Done",
                "exported": True,
                "deeplinks": [],
                "page": {
                    "nodes": [
                        {"id": "done_banner", "role": "text", "text": "All solved",
                         "bounds": [0, 100, 1080, 300]},
                    ],
                    "scene": QUIZ_SCENE,
                },
            },
        ],
    }


def gallery_media_fixture() -> list[dict]:
    return [
        {"asset_id": 1, "filename": "IMG_0001.jpg", "folder": "DCIM",
         "captured_at": 1000, "objects": ["parrot", "cage"], "scene": "living room",
         "event": "pet day"},
        {"asset_id": 2, "filename": "IMG_0002.jpg", "folder": "DCIM",
         "captured_at": 2000, "objects": ["beach", "umbrella"], "scene": "seaside",
         "event": "vacation"},
        {"asset_id": 3, "filename": "IMG_0003.jpg", "folder": "DCIM",
         "captured_at": 3000, "objects": ["parrot", "palm tree"], "scene": "beach",
         "event": "vacation"},
        {"asset_id": 4, "filename": "IMG_0004.jpg", "folder": "Screenshots",
         "captured_at": 4000, "objects": ["receipt"], "scene": "indoor",
         "event": "shopping"},
        {"asset_id": 5, "filename": "IMG_0005.jpg", "folder": "DCIM",
         "captured_at": 5000, "objects": ["parrot"], "scene": "park",
         "event": "walk"},
    ]


@pytest.fixture
def shop_device() -> SimDevice:
    return SimDevice.from_fixture({"apps": [shop_app_fixture()], "seed": 7})


@pytest.fixture
def editor_device() -> SimDevice:
    return SimDevice.from_fixture({"apps": [editor_app_fixture()], "seed": 7})


@pytest.fixture
def full_device() -> SimDevice:
    return SimDevice.from_fixture({
        "apps": [shop_app_fixture(), editor_app_fixture(), secret_app_fixture()],
        "media": gallery_media_fixture(),
        "seed": 7,
    })
