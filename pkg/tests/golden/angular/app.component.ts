import { Component } from "@angular/core";
import { NgFor } from "@angular/common";
import { Tile965ce498Component } from "./components/tile-965ce498.component";

@Component({
  selector: "app-root",
  standalone: true,
  imports: [NgFor, Tile965ce498Component],
  templateUrl: "./app.component.html",
})
export class AppComponent {
  items0 = [
    { media_0: "/img/1.png", text_1: "Item 1", link_3: "/p/1" },
    { media_0: "/img/2.png", text_1: "Item 2", link_3: "/p/2" },
    { media_0: "/img/3.png", text_1: "Item 3", link_3: "/p/3" },
  ];
}
